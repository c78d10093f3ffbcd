// holdpp: command-line front end for the critically damped higher-order
// Langevin diffusion library.
//
//   holdpp params --n 3
//   holdpp verify --all --n-max 6
//   holdpp train --dataset eight_gaussians --n 3 --iters 20000 --out ck.hpp1
//   holdpp sample --ckpt ck.hpp1 --count 2000 --steps 250 --out samples.csv
//   holdpp plot --data d.csv --samples samples.csv --out fig.svg
//
// Exit codes: 0 ok, 1 check failure, 2 usage, 3 I/O.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "holdpp/holdpp.hpp"

#ifndef HOLDPP_VERSION
#define HOLDPP_VERSION "unknown"
#endif

namespace {

using holdpp::Rng;
using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitCheck = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Collects everything a run reports and writes it next to the outputs.
class Manifest {
 public:
  Manifest(std::string subcommand, std::uint64_t seed) : start_(utc_now()) {
    doc_["subcommand"] = std::move(subcommand);
    doc_["seed"] = seed;
    doc_["version"] = HOLDPP_VERSION;
    doc_["config"] = json::object();
    doc_["outputs"] = json::array();
    doc_["results"] = json::object();
  }
  json& config() { return doc_["config"]; }
  json& results() { return doc_["results"]; }
  void add_output(const fs::path& p) { doc_["outputs"].push_back(p.string()); }

  void write(const fs::path& path) {
    doc_["start"] = start_;
    doc_["end"] = utc_now();
    holdpp::write_file_atomic(path, [&](std::ostream& out) { out << doc_.dump(2) << '\n'; });
  }

 private:
  std::string start_;
  json doc_;
};

fs::path manifest_path(const fs::path& output) {
  auto p = output;
  p += ".manifest.json";
  return p;
}

/// Fills options that were not given on the command line from a key=value
/// file. Keys are long option names; '_' and '-' are interchangeable.
void apply_config_file(CLI::App* cmd, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw holdpp::IoError("cannot open config file '" + path + "'");
  for (const auto& item : CLI::ConfigBase().from_config(in)) {
    std::string key = item.name;
    for (char& c : key)
      if (c == '_') c = '-';
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config") throw UsageError("unknown config key '" + item.name + "' in " + path);
    if (opt->count() > 0) continue;
    opt->add_result(item.inputs);
    opt->run_callback();
  }
}

std::vector<std::size_t> parse_widths(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(cell, &used);
      if (used != cell.size() || v <= 0) throw std::invalid_argument(cell);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw UsageError("hidden widths must be positive integers, got '" + s + "'");
    }
  }
  if (out.empty()) throw UsageError("at least one hidden width is required");
  return out;
}

holdpp::DriftSpec spec_for_order(std::size_t n, double l_inv) {
  if (n == 0) throw UsageError("--n must be >= 1");
  return n == 1 ? holdpp::ou_spec(1.0, l_inv) : holdpp::critical_params(n, l_inv);
}

std::vector<std::vector<double>> to_data_space(const std::vector<holdpp::PhaseState>& states,
                                               const holdpp::Normalization& nz) {
  std::vector<std::vector<double>> out;
  out.reserve(states.size());
  for (const auto& s : states) {
    const auto pos = s.block(0);
    out.push_back(nz.mean.empty() ? std::vector<double>(pos.begin(), pos.end()) : nz.invert(pos));
  }
  return out;
}

std::vector<std::vector<double>> head(const std::vector<std::vector<double>>& pts, std::size_t k) {
  return {pts.begin(), pts.begin() + static_cast<long>(std::min(k, pts.size()))};
}

// ---------------------------------------------------------------------------

struct SeedOpt {
  std::uint64_t value = 0;
};

void add_seed(CLI::App* cmd, SeedOpt& seed) {
  cmd->add_option("--seed", seed.value, "RNG seed")->envname("HOLDPP_SEED")->capture_default_str();
}

// params ----------------------------------------------------------------------

struct ParamsArgs {
  std::size_t n = 0;
  double l_inv = 0.5;
};

int run_params(const ParamsArgs& a) {
  if (a.n < 2) throw UsageError("params needs --n >= 2 (order 1 has no coupling to damp); try 'holdpp params --n 3'");
  const auto spec = holdpp::critical_params(a.n, a.l_inv);
  std::cout << std::setprecision(15) << std::fixed;
  std::cout << "n            " << a.n << '\n';
  std::cout << "lambda*      " << *spec.lambda_star << '\n';
  std::cout << "xi           " << spec.xi << '\n';
  for (std::size_t i = 0; i < spec.gammas.size(); ++i)
    std::cout << "gamma_" << std::left << std::setw(7) << i + 1 << std::right << spec.gammas[i] << '\n';

  double res_double = 0.0;
  for (const auto& e : holdpp::eigenvalues(holdpp::drift_matrix(spec)))
    res_double = std::max(res_double, std::hypot(e.re - *spec.lambda_star, e.im));
  const auto ext = holdpp::critical_params<holdpp::Extended>(a.n);
  holdpp::Extended res_ext(0);
  for (const auto& e : holdpp::eigenvalues(holdpp::drift_matrix(ext), 2000)) {
    const holdpp::Extended d = sqrt((e.re - *ext.lambda_star) * (e.re - *ext.lambda_star) + e.im * e.im);
    res_ext = std::max(res_ext, d);
  }
  std::cout << std::scientific << std::setprecision(3);
  std::cout << "max|eig - lambda*|  " << static_cast<double>(res_ext) << "  (50-digit arithmetic)\n";
  std::cout << "max|eig - lambda*|  " << res_double << "  (double; a defective eigenvalue of multiplicity "
            << a.n << " is only resolved to ~eps^(1/" << a.n << "))\n";
  return kExitOk;
}

// verify ----------------------------------------------------------------------

struct VerifyArgs {
  bool spectral = false, dynamics = false, optimality = false, all = false;
  std::size_t n_max = 8;
  std::size_t trials = 1000;
  std::string mutate = "none";
  std::string manifest;
};

int run_verify(const VerifyArgs& a, std::uint64_t seed) {
  if (a.n_max < 2) throw UsageError("--n-max must be >= 2");
  holdpp::VerifyOptions opt;
  opt.n_max = a.n_max;
  opt.seed = seed;
  opt.optimality_trials = a.trials;
  if (a.mutate == "flip-gamma2") opt.mutation = holdpp::Mutation::flip_gamma2;
  else if (a.mutate == "perturb-gamma2") opt.mutation = holdpp::Mutation::perturb_gamma2;
  else if (a.mutate != "none") throw UsageError("unknown mutation '" + a.mutate + "'");

  const bool everything = a.all || !(a.spectral || a.dynamics || a.optimality);
  std::vector<holdpp::CheckResult> results;
  auto take = [&](std::vector<holdpp::CheckResult> rs) { results.insert(results.end(), rs.begin(), rs.end()); };
  if (everything || a.dynamics) take(holdpp::verify_dynamics(opt));
  if (everything || a.optimality) take(holdpp::verify_optimality(opt));
  if (everything || a.spectral) take(holdpp::verify_spectral(opt));

  Manifest m("verify", seed);
  m.config() = {{"n_max", a.n_max}, {"trials", a.trials}, {"mutate", a.mutate}, {"spectral", everything || a.spectral},
                {"dynamics", everything || a.dynamics}, {"optimality", everything || a.optimality}};
  int failed = 0;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS  " : "FAIL  ") << r.name << "  residual=" << std::setprecision(3) << std::scientific
              << r.residual << " tol=" << r.tolerance << "  " << r.detail << '\n';
    m.results()[r.name] = {{"passed", r.passed}, {"residual", r.residual}, {"tolerance", r.tolerance}, {"detail", r.detail}};
    if (!r.passed) ++failed;
  }
  std::cout << (failed ? std::to_string(failed) + " check(s) failed" : "all checks passed") << '\n';
  if (!a.manifest.empty()) m.write(a.manifest);
  return failed ? kExitCheck : kExitOk;
}

// train -----------------------------------------------------------------------

struct TrainArgs {
  std::string dataset = "eight_gaussians";
  std::size_t n = 3;
  std::size_t count = 20000;
  std::string hidden = "128,128,128";
  std::string out;
  std::string data_out;
  std::string config;
  bool quiet = false;
  holdpp::TrainConfig cfg;
};

int run_train(const TrainArgs& a, std::uint64_t seed) {
  if (a.out.empty()) throw UsageError("train needs --out");
  auto cfg = a.cfg;
  cfg.seed = seed;
  cfg.validate();
  const auto spec = spec_for_order(a.n, cfg.l_inv);
  const auto ds = holdpp::make_dataset(a.dataset, a.count, seed);
  auto net = holdpp::ScoreNet::make(a.n, ds.h, cfg.T, parse_widths(a.hidden));
  net.init(seed ^ 0x9e3779b97f4a7c15ULL);

  Manifest m("train", seed);
  m.config() = {{"dataset", a.dataset}, {"n", a.n},          {"h", ds.h},         {"count", a.count},
                {"hidden", a.hidden},   {"iters", cfg.iters}, {"batch", cfg.batch}, {"lr", cfg.lr},
                {"cosine_decay", cfg.cosine_decay}, {"T", cfg.T}, {"l_inv", cfg.l_inv}, {"alpha", cfg.alpha},
                {"t_eps", cfg.t_eps}, {"log_every", cfg.log_every}, {"config_file", a.config}};

  const auto t0 = std::chrono::steady_clock::now();
  auto res = holdpp::train(std::move(net), spec, ds.points, cfg, [&](std::size_t it, double loss) {
    if (!a.quiet) std::cerr << "iter " << it << "  loss " << std::setprecision(5) << loss << '\n';
  });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  holdpp::Checkpoint ck{res.net, spec, cfg, a.dataset, ds.normalization};
  holdpp::save_checkpoint(ck, a.out);
  m.add_output(a.out);
  if (!a.data_out.empty()) {
    std::vector<std::vector<double>> raw;
    raw.reserve(ds.points.size());
    for (const auto& p : ds.points) raw.push_back(ds.normalization.invert(p));
    holdpp::write_points_csv(a.data_out, raw, ds.h);
    m.add_output(a.data_out);
  }
  m.results() = {{"loss_trace", res.loss_trace},
                 {"final_loss", res.loss_trace.empty() ? json(nullptr) : json(res.loss_trace.back())},
                 {"parameters", res.net.params().size()},
                 {"seconds", secs}};
  m.write(manifest_path(a.out));
  std::cout << "wrote " << a.out << " (" << res.net.params().size() << " parameters, " << std::fixed
            << std::setprecision(1) << secs << " s)\n";
  return kExitOk;
}

// sample ----------------------------------------------------------------------

struct SampleArgs {
  std::string ckpt;
  std::string out;
  std::string reference;
  std::size_t count = 2000;
  std::size_t steps = 250;
  std::size_t n = 0;
};

int run_sample(const SampleArgs& a, std::uint64_t seed) {
  if (a.ckpt.empty() || a.out.empty()) throw UsageError("sample needs --ckpt and --out");
  if (a.count == 0) throw UsageError("--count must be positive");
  const auto ck = holdpp::load_checkpoint(a.ckpt);
  if (a.n != 0) holdpp::require_order(ck, a.n);
  holdpp::ReverseConfig rc;
  rc.steps = a.steps;
  rc.t_end = ck.cfg.T;
  rc.t_eps = ck.cfg.t_eps;
  rc.seed = seed;
  Rng rng(seed);
  const std::size_t h = ck.net.output_dim();
  const auto states = holdpp::em_reverse_batch(ck.spec, h, a.count, holdpp::network_score(ck.net), rc, rng);
  const auto pts = to_data_space(states, ck.normalization);

  Manifest m("sample", seed);
  m.config() = {{"ckpt", a.ckpt}, {"count", a.count}, {"steps", a.steps}, {"n", ck.spec.n}, {"h", h},
                {"t_end", rc.t_end}, {"t_eps", rc.t_eps}, {"reference", a.reference}};
  if (!a.reference.empty()) {
    const auto ref = holdpp::read_points_csv(a.reference);
    if (ref.empty() || ref.front().size() != h) throw holdpp::FormatError("reference CSV does not match h");
    const double e = holdpp::energy_distance(head(pts, 2000), head(ref, 2000));
    m.results()["energy_distance"] = e;
    std::cout << "energy distance to reference: " << std::setprecision(5) << e << '\n';
  }
  holdpp::write_points_csv(a.out, pts, h);
  m.add_output(a.out);
  m.write(manifest_path(a.out));
  std::cout << "wrote " << a.count << " samples to " << a.out << '\n';
  return kExitOk;
}

// plot ------------------------------------------------------------------------

struct PlotArgs {
  std::string data;
  std::string samples;
  std::string out;
  bool trajectory = false;
  std::string ckpt;
  std::size_t chains = 8;
  std::size_t steps = 250;
};

int run_plot(const PlotArgs& a, std::uint64_t seed) {
  if (a.out.empty()) throw UsageError("plot needs --out");
  Manifest m("plot", seed);
  std::string svg;
  if (a.trajectory) {
    if (a.ckpt.empty()) throw UsageError("plot --trajectory needs --ckpt");
    if (a.chains == 0) throw UsageError("--chains must be positive");
    const auto ck = holdpp::load_checkpoint(a.ckpt);
    holdpp::ReverseConfig rc;
    rc.steps = a.steps;
    rc.t_end = ck.cfg.T;
    rc.t_eps = ck.cfg.t_eps;
    Rng rng(seed);
    std::vector<std::vector<std::array<double, 2>>> paths(a.chains);
    const double mean = ck.normalization.mean.empty() ? 0.0 : ck.normalization.mean[0];
    const double scale = ck.normalization.scale.empty() ? 1.0 : ck.normalization.scale[0];
    holdpp::em_reverse_batch(ck.spec, ck.net.output_dim(), a.chains, holdpp::network_score(ck.net), rc, rng,
                             [&](std::size_t, double t, std::span<const holdpp::PhaseState> states) {
                               for (std::size_t c = 0; c < states.size(); ++c)
                                 paths[c].push_back({t, states[c].at(0, 0) * scale + mean});
                             });
    svg = holdpp::svg::lines(paths);
    m.config() = {{"trajectory", true}, {"ckpt", a.ckpt}, {"chains", a.chains}, {"steps", a.steps}, {"n", ck.spec.n}};
  } else {
    if (a.samples.empty()) throw UsageError("plot needs --samples (or --trajectory --ckpt)");
    const auto samples = holdpp::read_points_csv(a.samples);
    if (samples.empty()) throw holdpp::FormatError("'" + a.samples + "' has no points");
    std::vector<std::vector<double>> data;
    if (!a.data.empty()) {
      data = holdpp::read_points_csv(a.data);
      if (data.empty()) throw holdpp::FormatError("'" + a.data + "' has no points");
    }
    svg = holdpp::svg::scatter(data, samples);
    m.config() = {{"data", a.data}, {"samples", a.samples}};
  }
  holdpp::write_file_atomic(a.out, [&](std::ostream& out) { out << svg; });
  m.add_output(a.out);
  m.write(manifest_path(a.out));
  std::cout << "wrote " << a.out << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Critically damped higher-order Langevin diffusion: parameters, verification, training, sampling"};
  app.set_version_flag("--version", std::string(HOLDPP_VERSION));
  app.require_subcommand(1);

  SeedOpt seed;

  ParamsArgs pa;
  auto* params = app.add_subcommand("params", "Print critically damped coefficients for order n");
  params->add_option("--n", pa.n, "Order (>= 2)")->required();
  params->add_option("--l-inv", pa.l_inv, "Stationary variance L^-1")->capture_default_str();
  add_seed(params, seed);  // accepted for uniformity; params is deterministic

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Run the numerical and exact-arithmetic check suites");
  verify->add_flag("--spectral", va.spectral, "Exact characteristic-polynomial identities");
  verify->add_flag("--dynamics", va.dynamics, "Spectrum, exponential, covariance and stationarity checks");
  verify->add_flag("--optimality", va.optimality, "Random perturbations never beat the critical rate");
  verify->add_flag("--all", va.all, "All suites (the default when none is chosen)");
  verify->add_option("--n-max", va.n_max, "Largest order checked")->capture_default_str();
  verify->add_option("--trials", va.trials, "Perturbations per order for --optimality")->capture_default_str();
  verify->add_option("--mutate", va.mutate, "Corrupt gamma_2 on purpose: none, flip-gamma2, perturb-gamma2")
      ->capture_default_str();
  verify->add_option("--manifest", va.manifest, "Write a JSON manifest of the results");
  add_seed(verify, seed);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a score network on a toy dataset");
  train->add_option("--dataset", ta.dataset, "eight_gaussians, two_moons, swiss_roll_2d, gaussian_1d")->capture_default_str();
  train->add_option("--n", ta.n, "Order of the dynamics")->capture_default_str();
  train->add_option("--count", ta.count, "Training points to generate")->capture_default_str();
  train->add_option("--hidden", ta.hidden, "Hidden layer widths, comma separated")->capture_default_str();
  train->add_option("--iters", ta.cfg.iters, "Optimizer steps")->capture_default_str();
  train->add_option("--batch", ta.cfg.batch, "Minibatch size")->capture_default_str();
  train->add_option("--lr", ta.cfg.lr, "Peak learning rate")->capture_default_str();
  train->add_option("--cosine-decay", ta.cfg.cosine_decay, "Half-cosine learning-rate decay")->capture_default_str();
  train->add_option("--T", ta.cfg.T, "Diffusion horizon")->capture_default_str();
  train->add_option("--l-inv", ta.cfg.l_inv, "Stationary variance L^-1")->capture_default_str();
  train->add_option("--alpha", ta.cfg.alpha, "Initial auxiliary variance factor")->capture_default_str();
  train->add_option("--t-eps", ta.cfg.t_eps, "Smallest training time")->capture_default_str();
  train->add_option("--log-every", ta.cfg.log_every, "Iterations per logged loss")->capture_default_str();
  train->add_option("--out", ta.out, "Checkpoint path")->required();
  train->add_option("--data-out", ta.data_out, "Also write the training data (data space) as CSV");
  train->add_option("--config", ta.config, "key=value file; command-line flags take precedence");
  train->add_flag("--quiet", ta.quiet, "No progress output");
  add_seed(train, seed);

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Generate samples from a checkpoint");
  sample->add_option("--ckpt", sa.ckpt, "Checkpoint path")->required();
  sample->add_option("--count", sa.count, "Number of samples")->capture_default_str();
  sample->add_option("--steps", sa.steps, "Euler-Maruyama steps")->capture_default_str();
  sample->add_option("--out", sa.out, "CSV output path")->required();
  sample->add_option("--n", sa.n, "Require this order (0 accepts the checkpoint's)");
  sample->add_option("--reference", sa.reference, "Data CSV to report the energy distance against");
  add_seed(sample, seed);

  PlotArgs pl;
  auto* plot = app.add_subcommand("plot", "Render an SVG scatter of samples, or reverse trajectories");
  plot->add_option("--data", pl.data, "Reference points drawn in gray");
  plot->add_option("--samples", pl.samples, "Samples drawn in color");
  plot->add_option("--out", pl.out, "SVG output path")->required();
  plot->add_flag("--trajectory", pl.trajectory, "Plot position against time for reverse chains");
  plot->add_option("--ckpt", pl.ckpt, "Checkpoint for --trajectory");
  plot->add_option("--chains", pl.chains, "Chains for --trajectory")->capture_default_str();
  plot->add_option("--steps", pl.steps, "Euler-Maruyama steps for --trajectory")->capture_default_str();
  add_seed(plot, seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*params) return run_params(pa);
    if (*verify) return run_verify(va, seed.value);
    if (*train) {
      apply_config_file(train, ta.config);
      return run_train(ta, seed.value);
    }
    if (*sample) return run_sample(sa, seed.value);
    if (*plot) return run_plot(pl, seed.value);
  } catch (const holdpp::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const holdpp::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCheck;
  }
  return kExitUsage;
}
