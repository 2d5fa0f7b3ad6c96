#include <sys/wait.h>

#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string cli_path() {
  const char* p = std::getenv("HOLA_CLI");
  REQUIRE(p != nullptr);
  return p;
}

fs::path work_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("hola_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args) {
  const fs::path out = work_dir() / "stdout.txt";
  const fs::path err = work_dir() / "stderr.txt";
  const std::string cmd = cli_path() + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = work_dir() / name;
  std::ofstream os(p);
  os << text;
  return p;
}

}  // namespace

TEST_CASE("sample: row count, echo and byte-identical reruns") {
  const fs::path cfg = write_config("sample.cfg",
                                    "target = gaussian\n"
                                    "dim = 1\n"
                                    "scheme = hola\n"
                                    "gamma = 0.1\n"
                                    "steps = 10\n"
                                    "burn_in = 3\n"
                                    "seed = 11\n"
                                    "noise_mode = two_noise\n"
                                    "x0 = 0.5\n"
                                    "out = chain.csv\n");
  const std::string args = "sample --config " + cfg.string() + " --out " + work_dir().string();
  REQUIRE(run_cli(args).exit_code == 0);
  const std::string first = slurp(work_dir() / "chain.csv");
  REQUIRE(run_cli(args).exit_code == 0);
  REQUIRE(slurp(work_dir() / "chain.csv") == first);

  std::istringstream is(first);
  std::string line;
  int rows = 0, comments = 0;
  std::getline(is, line);
  REQUIRE(line == "step,x1");
  while (std::getline(is, line)) {
    if (line.rfind("# ", 0) == 0) ++comments;
    else ++rows;
  }
  REQUIRE(rows == 7);  // steps - burn_in
  REQUIRE(comments >= 10);
  REQUIRE(first.find("# diverged = 0") != std::string::npos);
  REQUIRE(first.find("# target = gaussian") != std::string::npos);
}

TEST_CASE("sample: seed override changes the artifact deterministically") {
  const fs::path cfg = write_config("sample_seed.cfg",
                                    "target = logcosh\nscheme = ula\ngamma = 0.05\n"
                                    "steps = 20\nburn_in = 0\nseed = 1\n"
                                    "noise_mode = two_noise\nx0 = 0\nout = seeded.csv\n");
  const std::string base = "sample --config " + cfg.string() + " --out " + work_dir().string();
  REQUIRE(run_cli(base).exit_code == 0);
  const std::string with_file_seed = slurp(work_dir() / "seeded.csv");
  REQUIRE(run_cli(base + " --seed 2").exit_code == 0);
  const std::string with_flag_seed = slurp(work_dir() / "seeded.csv");
  REQUIRE(with_file_seed != with_flag_seed);
  REQUIRE(with_flag_seed.find("# seed = 2") != std::string::npos);
}

TEST_CASE("sample: ULA blow-up exits 3 and flags the footer") {
  const fs::path cfg = write_config("blowup.cfg",
                                    "target = double_well\ndim = 1\nscheme = ula\n"
                                    "gamma = 0.1\nsteps = 100\nburn_in = 0\nseed = 5\n"
                                    "noise_mode = two_noise\nx0 = 100\nout = blowup.csv\n");
  const RunResult r =
      run_cli("sample --config " + cfg.string() + " --out " + work_dir().string());
  REQUIRE(r.exit_code == 3);
  const std::string csv = slurp(work_dir() / "blowup.csv");
  REQUIRE(csv.find("# diverged = 1 at_step = ") != std::string::npos);
}

TEST_CASE("config errors exit 2 and name the offender") {
  const fs::path cfg = write_config("unknown.cfg",
                                    "target = logcosh\nscheme = hola\ngamma = 0.1\n"
                                    "steps = 10\nburn_in = 0\nseed = 1\n"
                                    "noise_mode = two_noise\nx0 = 0\nout = u.csv\n"
                                    "gammma = 0.2\n");
  const RunResult r =
      run_cli("sample --config " + cfg.string() + " --out " + work_dir().string());
  REQUIRE(r.exit_code == 2);
  REQUIRE(r.err.find("gammma") != std::string::npos);

  const fs::path missing = write_config("missing.cfg", "target = logcosh\n");
  const RunResult r2 =
      run_cli("sample --config " + missing.string() + " --out " + work_dir().string());
  REQUIRE(r2.exit_code == 2);
  REQUIRE(r2.err.find("scheme") != std::string::npos);

  const RunResult r3 = run_cli("sample --config " + (work_dir() / "absent.cfg").string());
  REQUIRE(r3.exit_code == 2);

  const fs::path badgamma = write_config("badgamma.cfg",
                                         "target = logcosh\nscheme = hola\ngamma = 1.5\n"
                                         "steps = 10\nburn_in = 0\nseed = 1\n"
                                         "noise_mode = two_noise\nx0 = 0\nout = g.csv\n");
  const RunResult r4 =
      run_cli("sample --config " + badgamma.string() + " --out " + work_dir().string());
  REQUIRE(r4.exit_code == 2);
}

TEST_CASE("plan prints the frozen unit-constants table") {
  const fs::path cfg = write_config("plan.cfg",
                                    "m = 1\nL1 = 1\nL2 = 1\nL = 1\nd = 1\n"
                                    "epsilons = 0.1,0.01\n");
  const RunResult r = run_cli("plan --config " + cfg.string());
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.out.find("m_tilde = 0.5") != std::string::npos);
  REQUIRE(r.out.find("gamma_max = 0.36363636363636365") != std::string::npos);
  REQUIRE(r.out.find("q1 = 10.5") != std::string::npos);
  REQUIRE(r.out.find("c1 = 1.75") != std::string::npos);
  REQUIRE(r.out.find("c2 = 9.5") != std::string::npos);
  REQUIRE(r.out.find("eps = 0.1") != std::string::npos);
  REQUIRE(r.out.find("n = 7565") != std::string::npos);
}

TEST_CASE("check passes on the gaussian and fails on the sabotaged fixture") {
  const fs::path good = write_config("check_good.cfg",
                                     "target = gaussian\ndim = 2\npoints = 50\nseed = 3\n");
  const RunResult r = run_cli("check --config " + good.string());
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.out.find("result = PASS") != std::string::npos);

  const fs::path bad = write_config("check_bad.cfg",
                                    "target = fixture_bad_gradient\npoints = 20\nseed = 3\n");
  const RunResult r2 = run_cli("check --config " + bad.string());
  REQUIRE(r2.exit_code == 1);
  REQUIRE(r2.out.find("result = FAIL") != std::string::npos);
}

TEST_CASE("rate: oracle sweep artifact is reproducible and fits slope 1") {
  const fs::path cfg = write_config("rate.cfg",
                                    "target = gaussian\ndim = 1\nscheme = ula\n"
                                    "gammas = 0.001,0.002,0.004,0.008\nmode = oracle\n"
                                    "seed = 1\nout = oracle.csv\n");
  const std::string args = "rate --config " + cfg.string() + " --out " + work_dir().string();
  REQUIRE(run_cli(args).exit_code == 0);
  const std::string first = slurp(work_dir() / "oracle.csv");
  REQUIRE(run_cli(args).exit_code == 0);
  REQUIRE(slurp(work_dir() / "oracle.csv") == first);
  REQUIRE(first.find("gamma,metric,error,stderr") != std::string::npos);
  REQUIRE(first.find("variance_bias") != std::string::npos);
  REQUIRE(first.find("# fit: slope = 1.0016627336363413") != std::string::npos);

  // refuses a sweep with fewer than 3 points
  const fs::path few = write_config("rate_few.cfg",
                                    "target = gaussian\ndim = 1\nscheme = ula\n"
                                    "gammas = 0.1,0.2\nmode = oracle\nseed = 1\nout = f.csv\n");
  REQUIRE(run_cli("rate --config " + few.string() + " --out " + work_dir().string()).exit_code ==
          2);
}

TEST_CASE("rate: small sampling sweep reruns byte-identically across thread counts") {
  const fs::path cfg = write_config("rate_s.cfg",
                                    "target = logcosh\nscheme = ula\n"
                                    "gammas = 0.1,0.2,0.4\nmetric = tv_1d\nmode = sampling\n"
                                    "steps = 20000\nreplicas = 4\nseed = 9\nbins = 40\n"
                                    "out = sweep.csv\n");
  const std::string base = "rate --config " + cfg.string() + " --out " + work_dir().string();
  REQUIRE(run_cli(base + " --threads 1").exit_code == 0);
  const std::string t1 = slurp(work_dir() / "sweep.csv");
  REQUIRE(run_cli(base + " --threads 2").exit_code == 0);
  REQUIRE(slurp(work_dir() / "sweep.csv") == t1);
}

TEST_CASE("usage errors exit nonzero") {
  REQUIRE(run_cli("").exit_code != 0);
  REQUIRE(run_cli("frobnicate --config /dev/null").exit_code != 0);
}
