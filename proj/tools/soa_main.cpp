#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "soa/fairness.hpp"
#include "soa/game.hpp"
#include "soa/model.hpp"
#include "soa/pce.hpp"
#include "soa/serialize.hpp"
#include "soa/spectral.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitCoverage = 3;
constexpr int kExitConvergence = 4;

struct GlobalOpts {
  std::uint64_t seed = 0x5eedb0b5u;
  bool strict = false;
  int threads = 1;
};

class Timer {
 public:
  explicit Timer(std::string label) : label_(std::move(label)) {}
  ~Timer() {
    const auto dt = std::chrono::steady_clock::now() - start_;
    const double s = std::chrono::duration<double>(dt).count();
    std::cerr << label_ << ": " << s << "s\n";
  }

 private:
  std::string label_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::uint64_t fnv1a64(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int k = 15; k >= 0; --k, v >>= 4) s[static_cast<std::size_t>(k)] = digits[v & 0xf];
  return s;
}

std::vector<soa::Coalition> parse_subsets(const std::string& text, int d) {
  std::vector<soa::Coalition> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t next = text.find(';', pos);
    if (next == std::string::npos) next = text.size();
    const std::string part = text.substr(pos, next - pos);
    if (!part.empty()) {
      std::vector<int> idx;
      std::size_t p = 0;
      while (p <= part.size()) {
        std::size_t q = part.find(',', p);
        if (q == std::string::npos) q = part.size();
        const std::string tok = part.substr(p, q - p);
        if (!tok.empty()) {
          try {
            idx.push_back(std::stoi(tok));
          } catch (const std::exception&) {
            throw std::invalid_argument("bad subset index '" + tok + "'");
          }
        }
        p = q + 1;
      }
      if (idx.empty()) throw std::invalid_argument("empty subset in --subsets");
      out.push_back(soa::Coalition::from_indices(d, idx));
    }
    pos = next + 1;
  }
  if (out.empty()) throw std::invalid_argument("--subsets names no subsets");
  return out;
}

std::vector<soa::Coalition> default_singletons(int d) {
  std::vector<soa::Coalition> out;
  for (int i = 1; i <= d; ++i) out.push_back(soa::Coalition::single(d, i));
  return out;
}

void emit_report(const json& report, const std::string& out_path) {
  const std::string text = soa::dump_json(report);
  if (out_path.empty())
    std::cout << text;
  else
    soa::save_text(out_path, text);
}

// Linear-model probe: coefficients from the axis responses, then an exact
// residual check at pseudorandom points.  Throws when the model is not
// affine, since the closed forms only apply there.
Eigen::VectorXd affine_coefficients(const soa::ModelAst& ast, int d) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
  const double c0 = soa::eval(ast, zero);
  Eigen::VectorXd b(d);
  for (int k = 0; k < d; ++k) {
    Eigen::VectorXd e = zero;
    e(k) = 1;
    b(k) = soa::eval(ast, e) - c0;
  }
  std::mt19937_64 rng(0x11ee5eedull);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int trial = 0; trial < 32; ++trial) {
    Eigen::VectorXd x(d);
    for (int k = 0; k < d; ++k) x(k) = unif(rng);
    const double expect = c0 + b.dot(x);
    const double got = soa::eval(ast, x);
    const double scale = std::max({1.0, std::abs(expect), std::abs(got)});
    if (std::abs(got - expect) > 1e-9 * scale)
      throw std::invalid_argument("closed-form method needs a linear model");
  }
  return b;
}

struct AnalyzeArgs {
  std::string model_path;
  std::string pce_path;
  std::string table_path;
  std::string subsets;
  std::string constraints_path;
  std::string out_path;
  std::string method = "auto";
  bool extend_table = false;
  double q = 1.0;
  double eps = 1e-8;
  int p_max = 12;
  int degree_hint = 10;
};

json attribution_with_method(const soa::Attribution& a, const std::string& method) {
  json j = soa::attribution_to_json(a);
  j["method"] = method;
  return j;
}

int run_analyze(const AnalyzeArgs& args, const GlobalOpts& global) {
  Timer timer("analyze");
  json report = json::object();
  report["seed"] = global.seed;

  std::vector<soa::Attribution> attributions;
  std::string method_used;
  int d = 0;
  bool converged = true;

  // The spectral paths share table handling: an explicit file extends only
  // on request, a scratch table extends freely.
  std::optional<soa::ElementaryTable> table;
  bool table_from_file = false;
  if (!args.table_path.empty()) {
    table = soa::load_table(args.table_path);
    table_from_file = true;
  }

  if (!args.pce_path.empty()) {
    if (!args.model_path.empty())
      throw std::invalid_argument("--model and --pce are mutually exclusive");
    const soa::Pce pce = soa::pce_from_json(soa::load_json(args.pce_path));
    d = pce.d;
    if (args.method != "auto" && args.method != "spectral")
      throw std::invalid_argument("a stored expansion only supports the spectral method");
    const std::vector<soa::Coalition> subsets =
        args.subsets.empty() ? default_singletons(d) : parse_subsets(args.subsets, d);
    if (!table) table.emplace(d, 0);
    if (table->dim() != d) throw std::invalid_argument("table dimension mismatch");
    const bool may_extend = !table_from_file || args.extend_table;
    for (const auto& u : subsets) {
      for (const auto& [alpha, y] : pce.coeffs) {
        if (alpha.is_zero()) continue;
        const soa::Coalition s = alpha.support();
        if (may_extend)
          table->ensure(s, u);
        else if (!table->covers(s, u))
          throw soa::CoverageError(s, "table does not cover support set " + s.to_string());
      }
      const soa::SpectralResult r = soa::spectral_shapley_owen(pce, u, *table);
      soa::Attribution a;
      a.subset = r.subset;
      a.value = r.estimate;
      a.error_bound = r.error_bound;
      a.exact = false;
      attributions.push_back(a);
    }
    method_used = "spectral";
    report["model_hash"] = "fnv1a64:" + hex64(fnv1a64(soa::load_bytes(args.pce_path)));
    report["distribution"] = soa::distribution_to_json(pce.distribution);
    report["rosenblatt"] = json{{"ordering", pce.distribution.ordering()}, {"expansions", 1}};
    double sum = 0;
    for (const auto& [alpha, y] : pce.coeffs)
      if (!alpha.is_zero()) sum += y * y;
    report["pce"] = json{{"terms", pce.coeffs.size()},
                         {"epsilon_l", std::max(0.0, pce.variance_estimate - sum)},
                         {"converged", pce.converged},
                         {"sigma2_estimate", pce.variance_estimate}};
    converged = pce.converged;
  } else {
    if (args.model_path.empty())
      throw std::invalid_argument("analyze needs --model or --pce");
    const soa::ModelFile mf = soa::model_from_json(soa::load_json(args.model_path));
    d = mf.d;
    report["model_hash"] = "fnv1a64:" + hex64(fnv1a64(soa::load_bytes(args.model_path)));
    const std::vector<soa::Coalition> subsets =
        args.subsets.empty() ? default_singletons(d) : parse_subsets(args.subsets, d);

    const bool discrete = mf.joint_pmf.has_value() || mf.distribution->discrete();
    std::string method = args.method;
    if (method == "auto") {
      if (discrete)
        method = "exact";
      else if (mf.distribution->continuous())
        method = "spectral";
      else
        throw std::invalid_argument(
            "inputs mix discrete and continuous laws; no analysis path applies");
    }

    if (mf.joint_pmf)
      report["distribution"] = json{{"joint_pmf_rows", mf.joint_pmf->rows.size()}};
    else
      report["distribution"] = soa::distribution_to_json(*mf.distribution);

    if (method == "exact") {
      if (!discrete)
        throw std::invalid_argument("exact enumeration needs finite discrete inputs");
      const soa::DiscreteGameResult res =
          mf.joint_pmf ? soa::exact_game(mf.ast, *mf.joint_pmf, global.threads)
                       : soa::exact_game(mf.ast, *mf.distribution, global.threads);
      for (const auto& u : subsets) {
        const soa::Rational v = soa::shapley_owen(res.game, u);
        soa::Attribution a;
        a.subset = u;
        a.value = v.to_double();
        a.error_bound = 0;
        a.exact = true;
        a.exact_value = v;
        attributions.push_back(a);
      }
      method_used = "exact-enumeration";
    } else if (method == "spectral") {
      if (!mf.distribution || !mf.distribution->continuous())
        throw std::invalid_argument("the spectral path needs continuous inputs");
      soa::SparseConfig cfg;
      cfg.q = args.q;
      cfg.epsilon = args.eps;
      cfg.p_max = args.p_max;
      cfg.degree_hint = args.degree_hint;
      cfg.seed = global.seed;
      cfg.threads = global.threads;
      const soa::ModelFn fn = soa::make_evaluator(mf.ast, d);
      const bool may_extend = !table_from_file || args.extend_table;
      soa::EndToEndRun run =
          soa::end_to_end_run(fn, *mf.distribution, cfg, subsets,
                              table ? &*table : nullptr, may_extend);
      for (const auto& r : run.results) {
        soa::Attribution a;
        a.subset = r.subset;
        a.value = r.estimate;
        a.error_bound = r.error_bound;
        a.exact = false;
        attributions.push_back(a);
      }
      method_used = "spectral";
      report["rosenblatt"] =
          json{{"ordering", mf.distribution->ordering()}, {"expansions", run.orderings}};
      report["pce"] = json{{"terms", run.pce_terms},
                           {"epsilon_l", run.epsilon_l},
                           {"converged", run.converged},
                           {"sigma2_estimate", run.sigma2_estimate}};
      converged = run.converged;
    } else if (method == "closed-form") {
      const Eigen::VectorXd b = affine_coefficients(mf.ast, d);
      Eigen::VectorXd sh;
      if (mf.distribution && mf.distribution->is_mvnormal()) {
        sh = soa::closed_form_linear_gaussian(b, mf.distribution->normal().cov);
      } else if (mf.distribution && mf.distribution->independent() &&
                 mf.distribution->continuous()) {
        Eigen::VectorXd var(d);
        for (int k = 0; k < d; ++k) {
          const soa::Marginal& m = mf.distribution->marginals()[static_cast<std::size_t>(k)];
          var(k) = m.type == soa::Marginal::Type::uniform
                       ? (m.b - m.a) * (m.b - m.a) / 12.0
                       : m.sigma * m.sigma;
        }
        sh = soa::closed_form_linear(b, var);
      } else {
        throw std::invalid_argument(
            "the closed form needs a joint normal or independent continuous inputs");
      }
      for (const auto& u : subsets) {
        if (u.size() != 1)
          throw std::invalid_argument("the closed form covers singleton subsets only");
        soa::Attribution a;
        a.subset = u;
        a.value = sh(u.members()[0] - 1);
        a.error_bound = 0;
        a.exact = false;
        attributions.push_back(a);
      }
      method_used = "closed-form";
    } else {
      throw std::invalid_argument("unknown method '" + method + "'");
    }
  }

  // Persist on-demand table rows when the user asked for that.
  if (table_from_file && args.extend_table && !table->extras().empty())
    soa::save_table(args.table_path, *table);

  json attrs = json::array();
  for (const auto& a : attributions) attrs.push_back(attribution_with_method(a, method_used));
  report["attributions"] = attrs;

  if (!args.constraints_path.empty()) {
    const std::vector<soa::Constraint> constraints =
        soa::constraints_from_json(soa::load_json(args.constraints_path), d);
    json verdicts = json::array();
    for (const auto& c : constraints) {
      json v = soa::verdict_to_json(soa::check(c, attributions));
      v["constraint"] = soa::constraint_to_json(c);
      verdicts.push_back(v);
    }
    report["verdicts"] = verdicts;
  }

  emit_report(report, args.out_path);
  if (global.strict && !converged) {
    std::cerr << "expansion did not reach the target residual (--strict)\n";
    return kExitConvergence;
  }
  return kExitOk;
}

int run_table(int d, int max_order, const std::string& out_path, const GlobalOpts& global) {
  Timer timer("table");
  const soa::ElementaryTable table = soa::precompute_table(d, max_order, global.threads);
  const bool binary = out_path.size() >= 4 &&
                      out_path.compare(out_path.size() - 4, 4, ".bin") == 0;
  std::vector<std::uint8_t> fresh;
  if (binary) {
    fresh = soa::table_to_binary(table);
  } else {
    const std::string text = soa::dump_json(soa::table_to_json(table));
    fresh.assign(text.begin(), text.end());
  }
  std::error_code ec;
  if (std::filesystem::exists(out_path, ec)) {
    const std::vector<std::uint8_t> existing = soa::load_bytes(out_path);
    if (existing == fresh) {
      std::cerr << "table verified, file unchanged\n";
      return kExitOk;
    }
  }
  soa::save_bytes(out_path, fresh);
  return kExitOk;
}

int run_pce(const std::string& model_path, double q, double eps, int p_max, int degree_hint,
            const std::string& out_path, const GlobalOpts& global) {
  Timer timer("pce");
  const soa::ModelFile mf = soa::model_from_json(soa::load_json(model_path));
  if (!mf.distribution || !mf.distribution->continuous())
    throw std::invalid_argument("expansions need continuous inputs");
  soa::SparseConfig cfg;
  cfg.q = q;
  cfg.epsilon = eps;
  cfg.p_max = p_max;
  cfg.degree_hint = degree_hint;
  cfg.seed = global.seed;
  cfg.threads = global.threads;
  const soa::Pce pce =
      soa::build_sparse(soa::make_evaluator(mf.ast, mf.d), *mf.distribution, cfg);
  soa::save_text(out_path, soa::dump_json(soa::pce_to_json(pce)));
  if (!pce.converged) {
    std::cerr << "expansion did not reach the target residual within p_max\n";
    if (global.strict) return kExitConvergence;
  }
  return kExitOk;
}

int run_game(const std::string& model_path, const std::string& out_path,
             const GlobalOpts& global) {
  Timer timer("game");
  const soa::ModelFile mf = soa::model_from_json(soa::load_json(model_path));
  const soa::DiscreteGameResult res =
      mf.joint_pmf ? soa::exact_game(mf.ast, *mf.joint_pmf, global.threads)
                   : soa::exact_game(mf.ast, *mf.distribution, global.threads);
  const std::string text = soa::dump_json(soa::game_to_json(res.game));
  if (out_path.empty())
    std::cout << text;
  else
    soa::save_text(out_path, text);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variance-based attribution and fairness checks for decision models"};
  app.require_subcommand(1);

  GlobalOpts global;
  app.add_option("--seed", global.seed, "seed for any sampling fallback");
  app.add_flag("--strict", global.strict, "fail (exit 4) when an expansion does not converge");
  app.add_option("--threads", global.threads, "worker threads")
      ->check(CLI::Range(1, 256));

  int table_d = 1, table_max_order = 6;
  std::string table_out;
  CLI::App* cmd_table = app.add_subcommand("table", "precompute elementary effect tables");
  cmd_table->add_option("--d", table_d, "input dimension")->required()->check(CLI::Range(1, 24));
  cmd_table->add_option("--max-order", table_max_order, "largest subset size enumerated")
      ->check(CLI::Range(1, 24));
  cmd_table->add_option("--out", table_out, "output file (.bin for binary)")->required();

  std::string pce_model, pce_out;
  double pce_q = 1.0, pce_eps = 1e-8;
  int pce_pmax = 12, pce_hint = 10;
  CLI::App* cmd_pce = app.add_subcommand("pce", "build a sparse expansion of a model");
  cmd_pce->add_option("--model", pce_model, "model file")->required();
  cmd_pce->add_option("--q", pce_q, "q-norm of the index simplex")->check(CLI::Range(1e-9, 1.0));
  cmd_pce->add_option("--eps", pce_eps, "target residual variance");
  cmd_pce->add_option("--p-max", pce_pmax, "largest simplex radius")->check(CLI::Range(0, 200));
  cmd_pce->add_option("--degree-hint", pce_hint, "assumed model degree for quadrature sizing")
      ->check(CLI::Range(0, 200));
  cmd_pce->add_option("--out", pce_out, "output file")->required();

  AnalyzeArgs an;
  CLI::App* cmd_analyze =
      app.add_subcommand("analyze", "attribute importance and check fairness constraints");
  cmd_analyze->add_option("--model", an.model_path, "model file");
  cmd_analyze->add_option("--pce", an.pce_path, "stored expansion file");
  cmd_analyze->add_option("--table", an.table_path, "elementary effect table file");
  cmd_analyze->add_option("--subsets", an.subsets,
                          "semicolon-separated subsets, e.g. \"1;2;1,2\"");
  cmd_analyze->add_option("--constraints", an.constraints_path, "constraints file");
  cmd_analyze->add_option("--out", an.out_path, "report file (stdout when omitted)");
  cmd_analyze->add_option("--method", an.method, "auto | exact | spectral | closed-form")
      ->check(CLI::IsMember({"auto", "exact", "spectral", "closed-form"}));
  cmd_analyze->add_flag("--extend-table", an.extend_table,
                        "append missing supports to --table instead of failing");
  cmd_analyze->add_option("--q", an.q, "q-norm of the index simplex")
      ->check(CLI::Range(1e-9, 1.0));
  cmd_analyze->add_option("--eps", an.eps, "target residual variance");
  cmd_analyze->add_option("--p-max", an.p_max, "largest simplex radius")
      ->check(CLI::Range(0, 200));
  cmd_analyze->add_option("--degree-hint", an.degree_hint,
                          "assumed model degree for quadrature sizing")
      ->check(CLI::Range(0, 200));

  std::string game_model, game_out;
  CLI::App* cmd_game = app.add_subcommand("game", "enumerate the exact game of a discrete model");
  cmd_game->add_option("--model", game_model, "model file")->required();
  cmd_game->add_option("--out", game_out, "output file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (cmd_table->parsed()) return run_table(table_d, table_max_order, table_out, global);
    if (cmd_pce->parsed())
      return run_pce(pce_model, pce_q, pce_eps, pce_pmax, pce_hint, pce_out, global);
    if (cmd_analyze->parsed()) return run_analyze(an, global);
    if (cmd_game->parsed()) return run_game(game_model, game_out, global);
  } catch (const soa::CoverageError& e) {
    std::cerr << "coverage error: " << e.what() << "\n";
    return kExitCoverage;
  } catch (const soa::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
