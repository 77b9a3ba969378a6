#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;  // stdout
  std::string err;  // stderr
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct ScratchDir {
  fs::path path = fs::temp_directory_path() / ("apsosvm_cli_" + std::to_string(::getpid()));
  ScratchDir() { fs::create_directories(path); }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

fs::path scratch() {
  static const ScratchDir dir;
  return dir.path;
}

Run run(const std::string& args) {
  const auto out = scratch() / "stdout.txt", err = scratch() / "stderr.txt";
  const std::string cmd = std::string(APSOSVM_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const auto p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

std::string config(const std::string& name) { return std::string(APSOSVM_CONFIG_DIR) + "/" + name; }
std::string data(const std::string& name) { return std::string(APSOSVM_DATA_DIR) + "/" + name; }

/// Parses `k=v k=v` lines.
std::vector<std::map<std::string, std::string>> records(const std::string& text) {
  std::vector<std::map<std::string, std::string>> out;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::map<std::string, std::string> rec;
    std::istringstream fields(line);
    std::string f;
    while (fields >> f) {
      const auto eq = f.find('=');
      REQUIRE(eq != std::string::npos);
      rec[f.substr(0, eq)] = f.substr(eq + 1);
    }
    out.push_back(rec);
  }
  return out;
}

std::string strip_elapsed(const std::string& text) {
  std::istringstream lines(text);
  std::string line, out;
  while (std::getline(lines, line)) {
    const auto pos = line.find(" elapsed_ms=");
    out += line.substr(0, pos) + "\n";
  }
  return out;
}

std::vector<double> reals(const std::string& csv) {
  std::vector<double> v;
  std::istringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) v.push_back(std::stod(item));
  return v;
}

}  // namespace

TEST_CASE("optimize output is identical across invocations apart from timing") {
  const auto a = run("optimize --config " + config("sphere.cfg"));
  const auto b = run("optimize --config " + config("sphere.cfg"));
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(strip_elapsed(a.out) == strip_elapsed(b.out));
  const auto recs = records(a.out);
  REQUIRE(recs.size() == 1);
  CHECK(std::stod(recs[0].at("best_fitness")) < 1e-2);
  CHECK(a.out.find("elapsed_ms=") > a.out.find("rejected_moves="));

  const auto c = run("optimize --config " + config("sphere.cfg") + " --seed 2");
  REQUIRE(c.code == 0);
  CHECK(strip_elapsed(c.out) != strip_elapsed(a.out));
}

TEST_CASE("banner echoes the resolved seed and config on stderr") {
  const auto a = run("optimize --config " + config("sphere.cfg") + " --seed 17");
  REQUIRE(a.code == 0);
  CHECK(a.err.rfind("# apsosvm optimize seed=17 config=", 0) == 0);
  CHECK(a.err.find("n_particles=40") != std::string::npos);
  CHECK(a.err.find("objective=sphere") != std::string::npos);
  CHECK(records(a.out)[0].at("seed") == "17");

  const auto b = run("optimize");
  REQUIRE(b.code == 0);
  CHECK(b.err.rfind("# apsosvm optimize seed=0 config=none", 0) == 0);
}

TEST_CASE("--out and --format table") {
  const auto path = scratch() / "out.txt";
  const auto a = run("optimize --config " + config("sphere.cfg") + " --out " + path.string());
  REQUIRE(a.code == 0);
  CHECK(a.out.empty());
  CHECK(slurp(path).rfind("objective=sphere", 0) == 0);

  const auto t = run("optimize --config " + config("sphere.cfg") + " --format table");
  REQUIRE(t.code == 0);
  CHECK(t.out.rfind("objective", 0) == 0);
  CHECK(std::count(t.out.begin(), t.out.end(), '\n') == 2);
}

TEST_CASE("svm-train then svm-predict on the two-point set") {
  const auto model = scratch() / "two.model";
  const auto train_cfg = write_file("train.cfg", "data = " + data("svm/two_point.txt") +
                                                     "\nkernel = linear\nC = 10\ntol = 1e-6\nmodel = " +
                                                     model.string() + "\n");
  const auto t = run("svm-train --config " + train_cfg.string());
  REQUIRE(t.code == 0);
  CHECK(fs::exists(model));
  CHECK(std::abs(std::stod(records(t.out)[0].at("bias"))) < 1e-9);

  const auto query = write_file("query.txt", "2\n-2\n");
  const auto pred_cfg = write_file("pred.cfg", "model = " + model.string() + "\ndata = " + query.string() + "\n");
  const auto p = run("svm-predict --config " + pred_cfg.string());
  REQUIRE(p.code == 0);
  const auto recs = records(p.out);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].at("prediction") == "+1");
  CHECK(recs[1].at("prediction") == "-1");
  // w = 1, b = 0 gives f(x) = x.
  CHECK(std::stod(recs[0].at("decision")) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(std::stod(recs[1].at("decision")) == doctest::Approx(-2.0).epsilon(1e-6));

  const auto labeled = write_file("labeled.txt", "+1 2\n-1 -2\n+1 -3\n");
  const auto lab_cfg = write_file("lab.cfg", "model = " + model.string() + "\ndata = " + labeled.string() + "\n");
  const auto l = run("svm-predict --config " + lab_cfg.string());
  REQUIRE(l.code == 0);
  const auto lrecs = records(l.out);
  REQUIRE(lrecs.size() == 4);
  CHECK(lrecs[3].at("errors") == "1");
}

TEST_CASE("cobb on the two-good instance recovers (40, 50)") {
  const auto r = run("cobb --config " + config("cobb_n2.cfg"));
  REQUIRE(r.code == 0);
  const auto rec = records(r.out).at(0);
  CHECK(std::stod(rec.at("deviation")) <= 0.01);
  const auto u = reals(rec.at("best_position"));
  REQUIRE(u.size() == 2);
  CHECK(u[0] == doctest::Approx(40.0).epsilon(1e-3));
  CHECK(u[1] == doctest::Approx(50.0).epsilon(1e-3));
}

TEST_CASE("cobb table mode emits one row per (n, iterations) pair") {
  const auto cfg = write_file("cobb_small.cfg", "mode = table\nrows = 2:200, 3:300\nseeds = 3\n");
  const auto r = run("cobb --config " + cfg.string());
  REQUIRE(r.code == 0);
  const auto recs = records(r.out);
  REQUIRE(recs.size() == 2);
  CHECK(recs[1].at("n") == "3");
  CHECK(recs[1].at("iterations") == "300");
  CHECK(std::stod(recs[0].at("mean_deviation")) < 0.05);
}

TEST_CASE("tune writes one trace line per evaluation") {
  const auto trace = scratch() / "trace.txt";
  const auto cfg = write_file("tune.cfg", "data = " + data("svm/blobs.txt") +
                                              "\nn_particles = 6\nmax_iterations = 4\ntrace = " +
                                              trace.string() + "\n");
  const auto r = run("tune --config " + cfg.string());
  REQUIRE(r.code == 0);
  const auto rec = records(r.out).at(0);
  CHECK(rec.at("cv_error") == "0");
  const auto text = slurp(trace);
  const auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  CHECK(lines == std::stoul(rec.at("evaluations")) + 1);
}

TEST_CASE("adult on the bundled fixture") {
  const auto cfg = write_file("adult.cfg", "data_dir = " + data("adult") + "\ntrain_sizes = 128\ntest_size = 128\n");
  const auto r = run("adult --config " + cfg.string());
  REQUIRE(r.code == 0);
  const auto rec = records(r.out).at(0);
  CHECK(rec.at("train_size") == "128");
  CHECK(std::stod(rec.at("error_percent")) < 50.0);

  const auto missing = run("adult --data-dir " + (scratch() / "no_such_dir").string());
  CHECK(missing.code == 6);
}

TEST_CASE("rcpsp single instance and table modes") {
  const auto one = write_file("one.cfg", "instance = " + data("rcpsp/fixtures/chain3.sm") + "\nbudgets = 50\n");
  const auto r = run("rcpsp --config " + one.string());
  REQUIRE(r.code == 0);
  const auto rec = records(r.out).at(0);
  CHECK(rec.at("feasible") == "1");
  CHECK(std::stoi(rec.at("makespan")) >= std::stoi(rec.at("critical_path_bound")));

  const auto table = write_file("table.cfg", "instances = " + data("rcpsp") + "\nbudgets = 100\nseeds = 2\n");
  const auto t = run("rcpsp --config " + table.string());
  REQUIRE(t.code == 0);
  const auto row = records(t.out).at(0);
  CHECK(row.at("instances") == "5");
  CHECK(row.at("seeds") == "2");
}

TEST_CASE("each error category has its own exit code and one stderr line") {
  const auto expect = [](const Run& r, int code, const std::string& category) {
    CHECK(r.code == code);
    const auto last = r.err.rfind("error category=");
    REQUIRE(last != std::string::npos);
    CHECK(r.err.compare(last, 15 + category.size() + 1, "error category=" + category + " ") == 0);
    CHECK(std::count(r.err.begin() + static_cast<long>(last), r.err.end(), '\n') == 1);
  };
  expect(run("frobnicate"), 2, "usage");
  expect(run(""), 2, "usage");
  expect(run("optimize --format json"), 2, "usage");
  expect(run("optimize --config " + (scratch() / "absent.cfg").string()), 6, "missing_file");
  expect(run("optimize --config " + write_file("bad_key.cfg", "colour = blue\n").string()), 3, "config");
  expect(run("optimize --config " + write_file("bad_val.cfg", "dimension = ten\n").string()), 3, "config");
  expect(run("svm-train --config " + write_file("no_data.cfg", "data = nowhere.txt\n").string()), 6,
         "missing_file");
  const auto ragged = write_file("ragged.txt", "+1 1 2\n-1 3\n");
  expect(run("svm-train --config " + write_file("ragged.cfg", "data = " + ragged.string() + "\n").string()), 4,
         "data");
  expect(run("svm-train --config " +
             write_file("conv.cfg", "data = " + data("svm/blobs.txt") +
                                        "\nkernel = rbf\ngamma = 1\nC = 1000\nmax_passes = 1\ntol = 1e-9\n")
                 .string()),
         5, "convergence");
}
