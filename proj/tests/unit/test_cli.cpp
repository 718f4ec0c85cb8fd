#include <doctest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "mfchaos/runner.hpp"

using namespace mfchaos;
namespace fs = std::filesystem;

namespace {

const char* kBase = R"(
[run]
experiment = weak-error
emit_svg = false

[plan]
n_grid = 8, 16, 32, 64
replicas = 20
psi = v^2
orders = 1
times = 0.5
master_seed = 5
)";

std::string with(const std::string& extra) { return std::string(kBase) + extra; }

std::string error_key(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mfchaos_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args, const fs::path& out_dir) {
  const std::string cmd = "MFCHAOS_OUTPUT_DIR='" + out_dir.string() + "' '" MFCHAOS_CLI "' -q " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config errors name the offending key") {
  CHECK(error_key(with("")) == "");
  CHECK(error_key(std::string(kBase).replace(std::string(kBase).find("replicas = 20"), 13, "replicas = -4")) ==
        "plan.replicas");
  CHECK(error_key(with("[phase]\nsigma = -1\n")) == "phase.sigma");
  CHECK(error_key(with("[phase]\nhorizon = abc\n")) == "phase.horizon");
  CHECK(error_key(with("[kernel]\nflavour = spicy\n")) == "kernel.flavour");
  CHECK(error_key(with("[kernel]\ntype = bumpy\n")) == "kernel.type");
  CHECK(error_key(with("[mystery]\nx = 1\n")) == "mystery.x");
  CHECK(error_key(with("[integrator]\nmethod = euler_maruyama\n")) != "");
  CHECK(error_key(with("[phase]\nsigma = 0.2\n")) == "integrator.method");
  CHECK(error_key(with("[phase]\nsigma = 0.2\n[integrator]\nmethod = euler_maruyama\n")) == "plan.variance");
}

TEST_CASE("replica count message") {
  std::string text = kBase;
  text.replace(text.find("replicas = 20"), 13, "replicas = 1");
  try {
    parse_config_text(text);
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "plan.replicas");
    CHECK(std::string(e.what()).find("must be >= 2") != std::string::npos);
  }
}

TEST_CASE("config hash") {
  const auto a = parse_config_text(kBase);
  CHECK(a.hash().size() == 64);
  CHECK(a.hash() == parse_config_text(kBase).hash());

  // layout, comments, key order and unhashed keys do not matter
  const auto b = parse_config_text(
      "; reordered\n[plan]\nmaster_seed = 5\ntimes = 0.5\norders = 1\npsi = v^2\nreplicas = 20\n"
      "n_grid = 8,16,32,64\n\n[run]\nemit_svg = true\noutput_dir = elsewhere\nexperiment = weak-error\n");
  CHECK(b.hash() == a.hash());

  CHECK(parse_config_text(with("[phase]\nhorizon = 0.75\n")).hash() != a.hash());
  auto c = a;
  c.plan.master_seed = 6;
  CHECK(c.hash() != a.hash());
  CHECK(a.canonical().find("plan.master_seed = 5") != std::string::npos);
}

TEST_CASE("sha-256 digest") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("schema lists every key") {
  std::set<std::string> keys;
  for (const auto& e : config_schema()) {
    CHECK(keys.insert(e.key).second);
    CHECK_FALSE(e.help.empty());
  }
  for (const char* k : {"run.experiment", "phase.sigma", "kernel.modes", "density.kind", "integrator.dt",
                        "plan.replicas", "plan.master_seed", "fit.bootstrap", "duality.tolerance"})
    CHECK(keys.count(k) == 1);
  CHECK(schema_text().find("[plan]") != std::string::npos);
}

TEST_CASE("output directory override") {
  auto cfg = parse_config_text(kBase);
  cfg.output_dir = "configured";
  ::unsetenv("MFCHAOS_OUTPUT_DIR");
  CHECK(resolve_output_dir(cfg) == fs::path("configured"));
  ::setenv("MFCHAOS_OUTPUT_DIR", "/tmp/elsewhere", 1);
  CHECK(resolve_output_dir(cfg) == fs::path("/tmp/elsewhere"));
  ::unsetenv("MFCHAOS_OUTPUT_DIR");
}

TEST_CASE("cli exit codes") {
  const auto dir = scratch_dir("exit");
  CHECK(run_cli("print-schema > /dev/null", dir) == 0);
  CHECK(run_cli("run /nonexistent.ini", dir) != 0);

  std::ofstream(dir / "bad.ini") << "[plan]\nreplicas = -3\n";
  CHECK(run_cli("run '" + (dir / "bad.ini").string() + "'", dir) == 1);

  // without interaction the weak error never resolves, so the slope check fails
  std::ofstream(dir / "null.ini") << "[kernel]\ntype = zero\n[fallback]\nenabled = false\n"
                                     "[plan]\nn_grid = 16, 32, 64, 128\nreplicas = 50\npsi = v^2\n";
  CHECK(run_cli("selftest '" + (dir / "null.ini").string() + "'", dir / "null") == 2);
}

TEST_CASE("selftest run writes a consistent output set") {
  const auto dir = scratch_dir("selftest");
  std::ofstream(dir / "st.ini") << "[run]\nemit_svg = true\n[plan]\nn_grid = 16, 32, 64, 128\nreplicas = 200\n"
                                   "psi = v^2\norders = 1, 2\nmaster_seed = 2024\n";
  REQUIRE(run_cli("selftest '" + (dir / "st.ini").string() + "'", dir / "out") == 0);
  const auto out = dir / "out";
  for (const char* f : {"results.csv", "fits.csv", "selftest.csv", "manifest.json"}) CHECK(fs::exists(out / f));

  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["exit_code"] == 0);
  CHECK(manifest["master_seed"] == 2024);
  CHECK(manifest["config_hash"].get<std::string>().size() == 64);
  for (const auto& [name, digest] : manifest["files"].items()) CHECK(digest == sha256_hex(slurp(out / name)));

  const std::string results = slurp(out / "results.csv");
  CHECK(results.rfind("experiment,kernel_id,density_id,N,order,time,R,estimate,stderr,master_seed", 0) == 0);
  CHECK(results.find(manifest["config_hash"].get<std::string>()) != std::string::npos);

  bool saw_svg = false;
  for (const auto& entry : fs::directory_iterator(out)) {
    if (entry.path().extension() != ".svg") continue;
    saw_svg = true;
    boost::property_tree::ptree tree;
    CHECK_NOTHROW(boost::property_tree::read_xml(entry.path().string(), tree));
    CHECK(tree.get_child_optional("svg").has_value());
  }
  CHECK(saw_svg);
}

TEST_CASE("runs are reproducible") {
  auto cfg = parse_config_text(kBase);
  const auto d1 = scratch_dir("rep1"), d2 = scratch_dir("rep2");
  cfg.output_dir = d1;
  REQUIRE(run_experiment(cfg).exit_code == 0);
  cfg.output_dir = d2;
  cfg.plan.workers = 1;
  REQUIRE(run_experiment(cfg).exit_code == 0);
  for (const char* f : {"results.csv", "fits.csv"}) CHECK(sha256_hex(slurp(d1 / f)) == sha256_hex(slurp(d2 / f)));
}

TEST_CASE("svg rendering") {
  PlotSeries s{"m = 1", {{16, 0.1, 0.01}, {32, 0.05, 0.01}, {64, 0.025, 0.002}, {128, 0.0125, 0.001}}, std::nullopt};
  s.fit = fit_rate(s.points);
  const std::string svg = render_loglog_svg("weak error <&>", "|error|", {s});
  std::istringstream in(svg);
  boost::property_tree::ptree tree;
  CHECK_NOTHROW(boost::property_tree::read_xml(in, tree));
  CHECK(svg.find("&lt;&amp;&gt;") != std::string::npos);
}

TEST_CASE("default step follows the horizon") {
  CHECK(parse_config_text(kBase).integrator.dt == doctest::Approx(1e-3));
  auto c = parse_config_text(with("[phase]\nhorizon = 1.0\n"));
  CHECK(c.integrator.dt == doctest::Approx(2e-3));
  c = parse_config_text(with("[phase]\nhorizon = 1.0\n[integrator]\ndt = 0.0005\n"));
  CHECK(c.integrator.dt == doctest::Approx(5e-4));
}
