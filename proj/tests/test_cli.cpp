#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qdband/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("qdband_test_" + std::to_string(std::rand()) +
            std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

//! Runs the CLI with stderr captured.
int run_cli(const std::vector<std::string>& args, std::string* err = nullptr) {
  struct CerrCapture {
    std::ostringstream captured;
    std::streambuf* old = std::cerr.rdbuf(captured.rdbuf());
    ~CerrCapture() { std::cerr.rdbuf(old); }
  } capture;
  const int code = qdband::cli::run(args);
  if (err) *err = capture.captured.str();
  return code;
}

// split a CSV line into doubles, honoring the inf literals
std::vector<double> parse_csv_line(const std::string& line) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t next = line.find(',', pos);
    if (next == std::string::npos) next = line.size();
    const std::string field = line.substr(pos, next - pos);
    if (field == "inf") {
      out.push_back(std::numeric_limits<double>::infinity());
    } else if (field == "-inf") {
      out.push_back(-std::numeric_limits<double>::infinity());
    } else {
      out.push_back(std::stod(field));
    }
    pos = next + 1;
  }
  return out;
}

const char* kFiveRows = "0.1\n0.2\n0.5\n0.7\n0.9\n";

}  // namespace

TEST_CASE("estimate writes the expected row for a hand-checked input",
          "[cli]") {
  TempDir dir;
  write_file(dir.file("in.csv"), kFiveRows);
  write_file(dir.file("grid.csv"), "0.5\n");

  const int code = run_cli({"estimate", dir.file("in.csv"), "--kernel",
                            "rect", "--h", "0.5", "--grid", dir.file("grid.csv"),
                            "--out", dir.file("est.csv")});
  REQUIRE(code == 0);

  std::istringstream out(read_file(dir.file("est.csv")));
  std::string header, row;
  std::getline(out, header);
  std::getline(out, row);
  CHECK(header == "u,qhat,psi,qhat_bc");
  const auto vals = parse_csv_line(row);
  REQUIRE(vals.size() == 4);
  CHECK(vals[0] == 0.5);
  CHECK(vals[1] == Catch::Approx(1.0).margin(1e-12));
  CHECK(vals[2] == Catch::Approx(1.0).margin(1e-12));
  CHECK(vals[3] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("estimate round-trips through its CSV at full precision", "[cli]") {
  TempDir dir;
  write_file(dir.file("in.csv"), kFiveRows);

  REQUIRE(run_cli({"estimate", dir.file("in.csv"), "--kernel", "truncnormal",
                   "--h", "0.5", "--grid", "uniform:21", "--out",
                   dir.file("est.csv")}) == 0);

  using namespace qdband;
  const auto sample = SortedSample::from_unsorted({0.1, 0.2, 0.5, 0.7, 0.9});
  const QdEstimate est = bc_kqd(sample, make_kernel(KernelName::TruncatedNormal),
                                Bandwidth(0.5, 5), Grid::equispaced(21));

  std::istringstream out(read_file(dir.file("est.csv")));
  std::string line;
  std::getline(out, line);  // header
  for (std::size_t j = 0; j < est.grid.size(); ++j) {
    REQUIRE(std::getline(out, line));
    const auto vals = parse_csv_line(line);
    REQUIRE(vals[0] == Catch::Approx(est.grid[j]).margin(1e-12));
    REQUIRE(vals[1] == Catch::Approx(est.qhat[j]).margin(1e-12));
    REQUIRE(vals[2] == Catch::Approx(est.psi[j]).margin(1e-12));
    REQUIRE(vals[3] == Catch::Approx(est.qhat_bc[j]).margin(1e-12));
  }
}

TEST_CASE("estimate reports file problems as data errors", "[cli]") {
  TempDir dir;

  SECTION("empty file") {
    write_file(dir.file("empty.csv"), "");
    std::string err;
    const int code = run_cli({"estimate", dir.file("empty.csv"), "--out",
                              dir.file("o.csv")},
                             &err);
    CHECK(code == 2);
    CHECK(err.find("empty.csv") != std::string::npos);
  }
  SECTION("missing file") {
    std::string err;
    const int code = run_cli({"estimate", dir.file("nope.csv"), "--out",
                              dir.file("o.csv")},
                             &err);
    CHECK(code == 2);
    CHECK(err.find("nope.csv") != std::string::npos);
  }
  SECTION("non-numeric row reported with its line number") {
    write_file(dir.file("bad.csv"), "x\n1.0\n2.0\noops\n3.0\n");
    std::string err;
    const int code = run_cli({"estimate", dir.file("bad.csv"), "--out",
                              dir.file("o.csv")},
                             &err);
    CHECK(code == 2);
    CHECK(err.find("line 4") != std::string::npos);
  }
  SECTION("single data row is not enough") {
    write_file(dir.file("one.csv"), "1.0\n");
    CHECK(run_cli({"estimate", dir.file("one.csv"), "--out",
                   dir.file("o.csv")}) == 2);
  }
}

TEST_CASE("usage errors exit with code 1", "[cli]") {
  TempDir dir;
  write_file(dir.file("in.csv"), kFiveRows);
  // unknown kernel
  CHECK(run_cli({"estimate", dir.file("in.csv"), "--kernel", "gaussian",
                 "--out", dir.file("o.csv")}) == 1);
  // bandwidth below 2/n for the supplied data
  CHECK(run_cli({"estimate", dir.file("in.csv"), "--h", "0.05", "--out",
                 dir.file("o.csv")}) == 1);
  // unknown flag
  CHECK(run_cli({"estimate", dir.file("in.csv"), "--bogus", "1", "--out",
                 dir.file("o.csv")}) == 1);
  // missing subcommand
  CHECK(run_cli({}) == 1);
  // invalid band level
  CHECK(run_cli({"band", dir.file("in.csv"), "--level", "1.5", "--n-sims",
                 "1000", "--out", dir.file("o.csv")}) == 1);
}

TEST_CASE("auto bandwidth is recorded in the manifest", "[cli]") {
  TempDir dir;
  std::string rows;
  for (int i = 1; i <= 5000; ++i) rows += std::to_string(i) + "\n";
  write_file(dir.file("in.csv"), rows);

  REQUIRE(run_cli({"estimate", dir.file("in.csv"), "--grid", "uniform:3",
                   "--out", dir.file("est.csv")}) == 0);

  const auto manifest =
      nlohmann::json::parse(read_file(dir.file("est.csv.manifest.json")));
  CHECK(manifest.at("command") == "estimate");
  CHECK(manifest.at("config").at("h_mode") == "auto");
  CHECK(manifest.at("config").at("h").get<double>() ==
        Catch::Approx(std::pow(5000.0, -0.375)).margin(1e-15));
  CHECK(manifest.at("outputs").size() == 1);
  CHECK(manifest.at("versions").get<std::string>().find("qdband") == 0);
}

TEST_CASE("band collapses onto the estimate under zero critical values",
          "[cli]") {
  TempDir dir;
  write_file(dir.file("in.csv"), kFiveRows);
  write_file(dir.file("grid.csv"), "0.5\n");

  // tabulated critical values with c = 0 at the needed taus
  nlohmann::ordered_json cv;
  cv["method"] = "known";
  cv["n"] = 5;
  cv["h"] = 0.5;
  cv["kernel"] = "rect";
  cv["grid"] = {0.5};
  cv["n_sims"] = 1000;
  cv["seed"] = 0;
  cv["one_sided"] = {{"0.9", 0.0}};
  cv["absolute"] = {{"0.95", 0.0}};
  write_file(dir.file("cv.json"), cv.dump(2));

  REQUIRE(run_cli({"band", dir.file("in.csv"), "--level", "0.9", "--kernel",
                   "rect", "--h", "0.5", "--grid", dir.file("grid.csv"),
                   "--critvals", dir.file("cv.json"), "--out",
                   dir.file("band.csv")}) == 0);

  std::istringstream out(read_file(dir.file("band.csv")));
  std::string header, row;
  std::getline(out, header);
  std::getline(out, row);
  CHECK(header == "u,lower,upper,qhat_bc");
  const auto vals = parse_csv_line(row);
  REQUIRE(vals.size() == 4);
  CHECK(vals[1] == vals[3]);  // lower = qhat_bc
  CHECK(vals[2] == vals[3]);  // upper = qhat_bc
}

TEST_CASE("band output is byte-identical across reruns and renders an SVG",
          "[cli]") {
  TempDir dir;
  std::string rows;
  for (int i = 1; i <= 60; ++i) rows += std::to_string(i * 0.016) + "\n";
  write_file(dir.file("in.csv"), rows);

  const std::vector<std::string> args = {
      "band",   dir.file("in.csv"),   "--level", "0.9",
      "--n-sims", "1000",             "--seed",  "7",
      "--svg",  dir.file("band.svg"), "--out",   dir.file("band.csv")};
  REQUIRE(run_cli(args) == 0);
  const std::string first = read_file(dir.file("band.csv"));
  const std::string first_svg = read_file(dir.file("band.svg"));
  const std::string first_manifest =
      read_file(dir.file("band.csv.manifest.json"));

  REQUIRE(run_cli(args) == 0);
  CHECK(read_file(dir.file("band.csv")) == first);
  CHECK(read_file(dir.file("band.svg")) == first_svg);
  CHECK(read_file(dir.file("band.csv.manifest.json")) == first_manifest);

  CHECK(first_svg.rfind("<svg", 0) == 0);
  CHECK(first_svg.find("polyline") != std::string::npos);

  // one-sided upper band carries the -inf literal on the lower side
  REQUIRE(run_cli({"band", dir.file("in.csv"), "--level", "0.9", "--side",
                   "upper", "--n-sims", "1000", "--seed", "7", "--out",
                   dir.file("upper.csv")}) == 0);
  CHECK(read_file(dir.file("upper.csv")).find("-inf") != std::string::npos);
}

TEST_CASE("critvals writes an increasing, reloadable JSON table", "[cli]") {
  TempDir dir;
  const std::vector<std::string> args = {
      "critvals", "--n",    "200",  "--n-sims", "1500",
      "--taus",   "0.8,0.9", "--seed", "11",     "--out",
      dir.file("cv.json")};
  REQUIRE(run_cli(args) == 0);
  const std::string first = read_file(dir.file("cv.json"));

  const auto j = nlohmann::json::parse(first);
  CHECK(j.at("method") == "known");
  CHECK(j.at("n") == 200);
  REQUIRE(j.at("one_sided").contains("0.8"));
  REQUIRE(j.at("one_sided").contains("0.9"));
  CHECK(j.at("one_sided").at("0.8").get<double>() <
        j.at("one_sided").at("0.9").get<double>());
  CHECK(j.at("absolute").at("0.9").get<double>() >=
        j.at("one_sided").at("0.9").get<double>());

  REQUIRE(run_cli(args) == 0);
  CHECK(read_file(dir.file("cv.json")) == first);

  // the table feeds straight back into band construction
  const auto cv = qdband::critical_values_from_json(j);
  CHECK(cv.one_sided_at(0.8) == j.at("one_sided").at("0.8").get<double>());
}

TEST_CASE("coverage validates reps and writes both reports", "[cli]") {
  TempDir dir;
  CHECK(run_cli({"coverage", "--n", "100", "--reps", "50", "--n-sims", "1000",
                 "--out-json", dir.file("c.json"), "--out-csv",
                 dir.file("c.csv")}) == 1);

  const std::vector<std::string> args = {
      "coverage",  "--n",      "100",      "--reps",  "120",
      "--n-sims",  "1000",     "--levels", "0.8,0.9", "--seed",
      "3",         "--out-json", dir.file("c.json"),  "--out-csv",
      dir.file("c.csv")};
  REQUIRE(run_cli(args) == 0);
  const std::string json_first = read_file(dir.file("c.json"));
  const std::string csv_first = read_file(dir.file("c.csv"));

  const auto j = nlohmann::json::parse(json_first);
  CHECK(j.at("coverage").size() == 2);
  CHECK(j.at("reps") == 120);
  const double c80 = j.at("coverage").at("0.8").get<double>();
  const double c90 = j.at("coverage").at("0.9").get<double>();
  CHECK(c80 <= c90);
  CHECK(csv_first.find("distribution,n,cov@0.8,cov@0.9") == 0);

  REQUIRE(run_cli(args) == 0);
  CHECK(read_file(dir.file("c.json")) == json_first);
  CHECK(read_file(dir.file("c.csv")) == csv_first);
}

TEST_CASE("coverage accepts an explicit bandwidth instead of the multiplier",
          "[cli]") {
  TempDir dir;
  REQUIRE(run_cli({"coverage", "--n", "100", "--reps", "100", "--n-sims",
                   "1000", "--levels", "0.9", "--h", "0.25", "--seed", "3",
                   "--out-json", dir.file("h.json"), "--out-csv",
                   dir.file("h.csv")}) == 0);
  const auto j = nlohmann::json::parse(read_file(dir.file("h.json")));
  CHECK(j.at("h").get<double>() == Catch::Approx(0.25).margin(1e-12));

  // --h and --c cannot both be given
  CHECK(run_cli({"coverage", "--n", "100", "--reps", "100", "--n-sims",
                 "1000", "--h", "0.25", "--c", "2.0", "--out-json",
                 dir.file("x.json"), "--out-csv", dir.file("x.csv")}) == 1);
}
