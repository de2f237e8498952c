#pragma once

// Command-line harness. Commands: generate, solve, round, verify, spectra.
// Each command has its own parser so an INI file given with --config can use
// flat `key = value` lines; flags on the command line override the file.
//
// Exit codes: 0 all assertions passed, 1 an assertion failed, 2 bad usage or
// parameters, 3 solver or budget failure.

#include <openssl/evp.h>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "ughc/suites.hpp"

namespace ughc::cli {

// Procedure: git_blob_sha1
// SHA-1 over "blob <len>\0<content>", the hash git gives a file's contents.
inline std::string git_blob_sha1(const std::string& content) {
  const std::string head = "blob " + std::to_string(content.size()) + std::string(1, '\0');
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 || EVP_DigestUpdate(ctx, head.data(), head.size()) != 1 ||
      EVP_DigestUpdate(ctx, content.data(), content.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("SHA-1 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot write " + path);
  out << content;
}

// Worker cap from UGHC_THREADS, clamped to the hardware; unset means 1.
inline int thread_cap() {
  int cap = 1;
  if (const char* env = std::getenv("UGHC_THREADS")) {
    try {
      cap = std::stoi(env);
    } catch (const std::exception&) {
      throw ParameterError("UGHC_THREADS must be a positive integer");
    }
    if (cap < 1) throw ParameterError("UGHC_THREADS must be a positive integer");
  }
  const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return std::min(cap, hw);
}

namespace detail {

struct Inputs {
  nlohmann::json files = nlohmann::json::object();
  std::string load(const std::string& role, const std::string& path) {
    auto s = read_file(path);
    files[role] = {{"path", path}, {"git_blob_sha1", git_blob_sha1(s)}, {"bytes", s.size()}};
    return s;
  }
};

inline nlohmann::json config_echo(const CLI::App& app) {
  nlohmann::json j = nlohmann::json::object();
  for (const CLI::Option* o : app.get_options()) {
    if (o->get_lnames().empty()) continue;
    const auto& name = o->get_lnames().front();
    if (name == "help") continue;
    if (o->count() > 0) {
      const auto& res = o->results();
      j[name] = res.size() == 1 ? nlohmann::json(res[0]) : nlohmann::json(res);
    } else {
      j[name] = o->get_default_str();
    }
  }
  return j;
}

// Common report envelope: command, config echo, input hashes, thread cap.
inline nlohmann::json envelope(const std::string& command, const CLI::App& app, const Inputs& in, int threads) {
  auto cfg = config_echo(app);
  auto files = in.files;
  files["config"] = {{"git_blob_sha1", git_blob_sha1(cfg.dump())}};
  return {{"command", command}, {"config", cfg}, {"inputs", files}, {"threads", threads}};
}

inline void emit_report(const std::string& path, const nlohmann::json& rep) {
  if (!path.empty()) write_file(path, rep.dump(2) + "\n");
}

inline void print_suite(std::ostream& out, const SuiteReport& rep) {
  for (const auto& c : rep.checks)
    out << (c.pass ? "  ok   " : "  FAIL ") << c.name << ": worst " << c.value << (c.upper ? " <= " : " >= ") << c.bound
        << " (" << c.samples << " samples)\n";
  out << rep.suite << ": " << (rep.ok() ? "PASS" : "FAIL") << " in " << std::fixed << std::setprecision(2)
      << rep.seconds << " s\n";
  out.unsetf(std::ios::fixed);
  out << std::setprecision(6);
}

inline int alpha_to_t(double alpha, int l) {
  const double t = alpha * l;
  const int ti = static_cast<int>(std::lround(t));
  if (std::abs(t - ti) > 1e-9 || ti < 1 || ti > l) throw ParameterError("alpha * l must be an integer in [1, l]");
  return ti;
}

class Command {
 public:
  Command(std::string name, std::string description) : name_(std::move(name)), app_(description, "ughc " + name_) {
    app_.option_defaults()->always_capture_default();
    app_.config_formatter(std::make_shared<CLI::ConfigINI>());
    app_.set_config("--config", "", "INI file of flat key = value lines; flags override it");
    app_.allow_config_extras(CLI::config_extras_mode::error);
    app_.add_option("--report", report_, "write the JSON report here");
  }
  CLI::App& app() { return app_; }
  const std::string& report_path() const { return report_; }
  const std::string& name() const { return name_; }

  // Returns -1 when parsing succeeded, otherwise the exit code.
  int parse(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    std::reverse(args.begin(), args.end());
    try {
      app_.parse(args);
    } catch (const CLI::ParseError& e) {
      const int rc = app_.exit(e, out, err);
      return rc == 0 ? 0 : 2;
    }
    if (auto* c = app_.get_config_ptr(); c && c->count() > 0) inputs.load("config_file", c->as<std::string>());
    return -1;
  }
  nlohmann::json envelope(int threads) const { return detail::envelope(name_, app_, inputs, threads); }

  Inputs inputs;

 private:
  std::string name_;
  CLI::App app_;
  std::string report_;
};

}  // namespace detail

// ---------------------------------------------------------------------------

struct Io {
  std::ostream& out;
  std::ostream& err;
  int threads = 1;
};

// Procedure: cmd_generate
inline int cmd_generate(const std::vector<std::string>& args, Io io) {
  detail::Command cmd("generate", "Generate a planted affine instance on a Johnson graph");
  int n = 8, l = 2, q = 2;
  double alpha = 0.5, eps = 0.0;
  std::uint64_t seed = 1;
  std::string out;
  auto& app = cmd.app();
  app.add_option("--n", n, "ground set size");
  app.add_option("--l", l, "subset size");
  app.add_option("--alpha", alpha, "intersection fraction; alpha * l must be an integer");
  app.add_option("--q", q, "alphabet size");
  app.add_option("--eps", eps, "fraction of corrupted edges");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--out", out, "instance file")->required();
  if (int rc = cmd.parse(args, io.out, io.err); rc >= 0) return rc;

  JohnsonGraph g(n, l, detail::alpha_to_t(alpha, l));
  auto [inst, A] = plant(g.simple(), q, {eps, seed});
  auto j = to_json(inst);
  j["metadata"]["planted"]["assignment"] = A;
  const auto text = j.dump() + "\n";
  write_file(out, text);
  auto rep = cmd.envelope(io.threads);
  rep["output"] = {{"path", out}, {"git_blob_sha1", git_blob_sha1(text)}};
  rep["vertices"] = inst.vertex_count();
  rep["edges"] = inst.edges().size();
  rep["realized_value"] = inst.planted->realized_value;
  rep["corrupted_edges"] = inst.planted->corrupted;
  detail::emit_report(cmd.report_path(), rep);
  io.out << "J(" << n << "," << l << "," << g.t() << "): " << inst.vertex_count() << " vertices, "
         << inst.edges().size() << " edges, q = " << q << "\n";
  io.out << "realized value " << inst.planted->realized_value << " (" << inst.planted->corrupted
         << " corrupted edges)\n";
  return 0;
}

// Procedure: cmd_solve
inline int cmd_solve(const std::vector<std::string>& args, Io io) {
  detail::Command cmd("solve", "Solve the degree-D relaxation and validate the pseudoexpectation");
  std::string instance, out;
  int degree = 4;
  RelaxOptions ro;
  SdpOptions so;
  auto& app = cmd.app();
  app.add_option("--instance", instance, "instance file")->required();
  app.add_option("--degree", degree, "relaxation degree (even)");
  app.add_option("--out", out, "pseudoexpectation file");
  app.add_option("--max-moments", ro.max_moments, "moment budget");
  app.add_option("--max-side", ro.max_side, "moment matrix side budget");
  app.add_option("--max-iter", so.max_iter, "interior point iteration cap");
  if (int rc = cmd.parse(args, io.out, io.err); rc >= 0) return rc;

  const auto inst = instance_from_json(nlohmann::json::parse(cmd.inputs.load("instance", instance)));
  auto [pe, info] = solve(relax(inst, degree, ro), so);
  auto v = validate(pe);
  auto rep = cmd.envelope(io.threads);
  rep["objective"] = info.objective;
  rep["degree"] = info.degree;
  rep["solver"] = {{"iterations", info.sdp.iterations}, {"gap", info.sdp.gap}, {"primal_infeasibility", info.sdp.pinf},
                   {"dual_infeasibility", info.sdp.dinf}, {"converged", info.sdp.converged}, {"seconds", info.seconds}};
  rep["validation"] = {{"scaling", v.scaling}, {"min_eig", v.min_eig}, {"partition", v.partition},
                       {"marginal_min", v.marginal_min}, {"marginal_sum", v.marginal_sum}, {"consistency", v.consistency},
                       {"failures", v.failures}, {"ok", v.ok()}};
  if (!out.empty()) {
    const auto text = pe_to_json(pe).dump() + "\n";
    write_file(out, text);
    rep["output"] = {{"path", out}, {"git_blob_sha1", git_blob_sha1(text)}};
  }
  rep["ok"] = v.ok();
  detail::emit_report(cmd.report_path(), rep);
  io.out << "degree " << info.degree << " objective " << info.objective << " (" << info.sdp.iterations
         << " iterations, " << info.seconds << " s)\n";
  io.out << "validation: " << (v.ok() ? "PASS" : "FAIL");
  for (const auto& f : v.failures) io.out << " [" << f << "]";
  io.out << "\n";
  return v.ok() ? 0 : 1;
}

inline void add_rounding_options(CLI::App& app, RoundingConfig& cfg, std::string& regime) {
  app.add_option("--regime", regime, "close (close-to-1) or low (low completeness)")
      ->check(CLI::IsMember({"close", "low"}));
  app.add_option("--eps", cfg.epsilon, "instance is (1 - eps)-satisfiable");
  app.add_option("--c", cfg.c, "low-completeness value; <= 0 uses the relaxation value");
  app.add_option("--degree", cfg.degree, "relaxation degree");
  app.add_option("--r", cfg.r, "main-loop restriction size; < 0 derives it");
  app.add_option("--min-restriction", cfg.min_restriction, "smallest restriction searched");
  app.add_option("--beta", cfg.beta, "step threshold; < 0 derives it");
  app.add_option("--nu", cfg.nu, "step width; < 0 derives it");
  app.add_option("--tau", cfg.tau, "mutual information target; < 0 derives it");
  app.add_option("--tv-delta", cfg.tv_delta, "TV exceedance threshold");
  app.add_option("--gamma", cfg.gamma, "stop once gamma/2 of the vertices are assigned");
  app.add_option("--t-max", cfg.t_max, "conditioning tuple budget");
  app.add_option("--tv-constant", cfg.tv_constant, "constant of the TV exceedance bound");
  app.add_option("--round-constant", cfg.round_constant, "constant of the rounding bound");
  app.add_option("--lift-always", cfg.lift_always, "lift to degree 2 + 4 even without certification");
  app.add_option("--max-iterations", cfg.max_iterations, "iteration cap; 0 means |V|");
  app.add_option("--seed", cfg.seed, "random seed");
}

inline Regime parse_regime(const std::string& s) { return s == "low" ? Regime::LowCompleteness : Regime::CloseToOne; }

// Procedure: cmd_round
inline int cmd_round(const std::vector<std::string>& args, Io io) {
  detail::Command cmd("round", "Run the rounding algorithm on an instance");
  std::string instance, out, trace, regime = "close";
  std::uint64_t opt_budget = 1ull << 24;
  RoundingConfig cfg;
  auto& app = cmd.app();
  app.add_option("--instance", instance, "instance file")->required();
  add_rounding_options(app, cfg, regime);
  app.add_option("--out", out, "assignment file");
  app.add_option("--trace", trace, "JSON-lines trace, one record per iteration");
  app.add_option("--opt-budget", opt_budget, "brute-force state budget for the OPT comparison");
  if (int rc = cmd.parse(args, io.out, io.err); rc >= 0) return rc;
  cfg.regime = parse_regime(regime);

  const auto j = nlohmann::json::parse(cmd.inputs.load("instance", instance));
  const auto inst = instance_from_json(j);
  std::optional<Assignment> witness;
  if (j.contains("metadata") && j["metadata"].contains("planted") && j["metadata"]["planted"].contains("assignment"))
    witness = j["metadata"]["planted"]["assignment"].get<Assignment>();
  auto [f, T] = main_algorithm(inst, cfg, witness ? &*witness : nullptr);

  SuiteReport checks;
  checks.suite = "trace";
  const int skipped = trace_checks(checks, T, "", false);
  auto rep = cmd.envelope(io.threads);
  rep["value"] = T.final_value;
  rep["trace_summary"] = T.summary();
  rep["checks"] = checks.to_json()["checks"];
  rep["failed"] = checks.failed();
  rep["lemmas_unevaluated"] = skipped;
  rep["witness"] = witness ? "planted assignment" : "final output";
  try {
    auto bf = brute_force_opt(inst, opt_budget);
    rep["opt"] = bf.value;
    rep["ratio"] = bf.value > 0 ? T.final_value / bf.value : 1.0;
  } catch (const BudgetExceeded&) {
    rep["opt"] = nullptr;
    rep["opt_note"] = "brute force exceeds the budget";
  }
  if (!out.empty()) {
    const auto text = nlohmann::json{{"assignment", f}, {"value", T.final_value}}.dump() + "\n";
    write_file(out, text);
    rep["output"] = {{"path", out}, {"git_blob_sha1", git_blob_sha1(text)}};
  }
  if (!trace.empty()) {
    const auto text = T.to_jsonl();
    write_file(trace, text);
    rep["trace"] = {{"path", trace}, {"git_blob_sha1", git_blob_sha1(text)}};
  }
  rep["ok"] = checks.ok();
  detail::emit_report(cmd.report_path(), rep);
  io.out << "value " << T.final_value;
  if (!rep["opt"].is_null()) io.out << " (OPT " << rep["opt"].get<double>() << ")";
  io.out << " after " << T.iterations.size() << " iteration(s)\n";
  for (const auto& w : T.warnings) io.out << "warning: " << w << "\n";
  if (skipped) io.out << "note: lemma checks not evaluable on " << skipped << " SubRound(s) at this degree\n";
  for (const auto& c : checks.failed()) io.out << "FAIL " << c << "\n";
  io.out << "trace checks: " << (checks.ok() ? "PASS" : "FAIL") << "\n";
  return checks.ok() ? 0 : 1;
}

// Validation of a stored pseudoexpectation against the program axioms.
inline SuiteReport pe_file_suite(const PseudoExpectation& pe, const UGInstance* inst) {
  SuiteReport rep;
  rep.suite = "pe";
  auto v = validate(pe);
  rep.at_most("scaling", v.scaling, 1e-6);
  rep.at_most("psd", -v.min_eig, 1e-6);
  rep.at_most("partition", v.partition, 1e-6);
  rep.at_least("local marginal nonnegative", v.marginal_min, -1e-8);
  rep.at_most("local marginal sum", v.marginal_sum, 1e-6);
  rep.at_most("table consistency", v.consistency, 1e-6);
  if (inst) {
    if (inst->vertex_count() != pe.vars().n || inst->q() != pe.vars().q)
      throw ParameterError("instance does not match the pseudoexpectation");
    const double val = pe(val_poly(*inst, pe.vars()));
    rep.at_most("value at most 1", val, 1 + 1e-6);
    rep.details["value"] = val;
  }
  rep.details["degree"] = v.degree;
  rep.details["psd_side"] = v.psd_side;
  return rep;
}

// Procedure: cmd_verify
inline int cmd_verify(const std::vector<std::string>& args, Io io) {
  detail::Command cmd("verify", "Run a named invariant suite or validate a pseudoexpectation file");
  std::string suite, pe_path, instance;
  int n = 0, l = 2, count = -1;
  double alpha = 0.5;
  std::uint64_t seed = 1, max_points = 30000;
  auto& app = cmd.app();
  app.add_option("--suite", suite, "spectra | parseval | expansion | steppoly | potentials | edgecover | solve | pipeline")
      ->check(CLI::IsMember({"spectra", "parseval", "expansion", "steppoly", "potentials", "edgecover", "solve", "pipeline"}));
  app.add_option("--pe", pe_path, "pseudoexpectation file to validate");
  app.add_option("--instance", instance, "instance matching --pe");
  app.add_option("--n", n, "spectra: ground set size; 0 sweeps every tuple");
  app.add_option("--l", l, "spectra: subset size");
  app.add_option("--alpha", alpha, "spectra: intersection fraction");
  app.add_option("--max-points", max_points, "spectra sweep: largest n^l");
  app.add_option("--count", count, "number of random samples; < 0 keeps the suite default");
  app.add_option("--seed", seed, "random seed");
  if (int rc = cmd.parse(args, io.out, io.err); rc >= 0) return rc;
  if (suite.empty() == pe_path.empty()) throw ParameterError("give exactly one of --suite and --pe");

  SuiteReport rep;
  if (!pe_path.empty()) {
    auto pe = pe_from_json(nlohmann::json::parse(cmd.inputs.load("pe", pe_path)));
    std::optional<UGInstance> inst;
    if (!instance.empty()) inst = instance_from_json(nlohmann::json::parse(cmd.inputs.load("instance", instance)));
    rep = pe_file_suite(pe, inst ? &*inst : nullptr);
  } else if (suite == "spectra") {
    SpectraOptions o;
    if (n > 0) {
      o.n = n;
      o.l = l;
      o.t = detail::alpha_to_t(alpha, l);
    }
    o.max_points = max_points;
    rep = spectra_suite(o);
  } else if (suite == "parseval") {
    ParsevalOptions o;
    o.seed = seed;
    if (count >= 0) o.count = count;
    rep = parseval_suite(o);
  } else if (suite == "expansion") {
    ExpansionOptions o;
    o.seed = seed;
    if (count >= 0) o.count = count;
    rep = expansion_suite(o);
  } else if (suite == "steppoly") {
    rep = steppoly_suite();
  } else if (suite == "potentials") {
    PotentialsOptions o;
    o.seed = seed;
    if (count >= 0) o.joints = count;
    rep = potentials_suite(o);
  } else if (suite == "edgecover") {
    EdgeCoverOptions o;
    o.seed = seed;
    if (count >= 0) o.pairs_per_graph = count;
    rep = edgecover_suite(o);
  } else if (suite == "solve") {
    SolveSuiteOptions o;
    o.seed = seed;
    if (count >= 0) o.cases.assign(default_solve_cases().begin(), default_solve_cases().begin() + std::min<std::size_t>(count, default_solve_cases().size()));
    rep = solve_suite(o);
  } else {
    PipelineOptions o;
    for (double eps : {0.0, 0.05, 1.0}) o.runs.push_back(make_run(2, eps, seed));
    rep = pipeline_suite(o);
  }
  auto out = cmd.envelope(io.threads);
  out["result"] = rep.to_json();
  out["ok"] = rep.ok();
  detail::emit_report(cmd.report_path(), out);
  detail::print_suite(io.out, rep);
  for (const auto& f : rep.failed()) io.err << "failed invariant: " << f << "\n";
  return rep.ok() ? 0 : 1;
}

// Procedure: cmd_spectra
inline int cmd_spectra(const std::vector<std::string>& args, Io io) {
  detail::Command cmd("spectra", "Print the walk spectrum of the Cayley domain [n]^l");
  int n = 3, l = 2;
  double alpha = 0.5;
  auto& app = cmd.app();
  app.add_option("--n", n, "alphabet of each coordinate");
  app.add_option("--l", l, "number of coordinates");
  app.add_option("--alpha", alpha, "fraction of coordinates re-randomized per step");
  if (int rc = cmd.parse(args, io.out, io.err); rc >= 0) return rc;

  CayleyDomain dom(n, l, detail::alpha_to_t(alpha, l));
  nlohmann::json rows = nlohmann::json::array();
  io.out << "d  multiplicity  lambda(d)  (1-alpha)^d\n";
  bool ok = true;
  for (int d = 0; d <= l; ++d) {
    const double lam = eigenvalue(dom, d), bound = std::pow(1 - dom.alpha(), d);
    ok = ok && lam <= bound + 1e-15;
    const double mult = binomd(l, d) * std::pow(n - 1.0, d);
    rows.push_back({{"d", d}, {"multiplicity", mult}, {"eigenvalue", lam}, {"decay_bound", bound}});
    io.out << d << "  " << mult << "  " << lam << "  " << bound << "\n";
  }
  auto rep = cmd.envelope(io.threads);
  rep["spectrum"] = rows;
  rep["ok"] = ok;
  detail::emit_report(cmd.report_path(), rep);
  return ok ? 0 : 1;
}

inline void usage(std::ostream& os) {
  os << "usage: ughc <command> [options]\n"
        "commands:\n"
        "  generate  planted instance on a Johnson graph\n"
        "  solve     degree-D relaxation plus validation report\n"
        "  round     rounding algorithm with trace and OPT comparison\n"
        "  verify    named invariant suite, or --pe FILE validation\n"
        "  spectra   eigenvalues of the Cayley walk\n"
        "run `ughc <command> --help` for the options of a command\n";
}

// Procedure: run
inline int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  if (argv.empty() || argv[0] == "--help" || argv[0] == "-h") {
    usage(argv.empty() ? err : out);
    return argv.empty() ? 2 : 0;
  }
  const std::vector<std::string> rest(argv.begin() + 1, argv.end());
  try {
    Io io{out, err, thread_cap()};
    Eigen::setNbThreads(io.threads);
    const auto& c = argv[0];
    if (c == "generate") return cmd_generate(rest, io);
    if (c == "solve") return cmd_solve(rest, io);
    if (c == "round") return cmd_round(rest, io);
    if (c == "verify") return cmd_verify(rest, io);
    if (c == "spectra") return cmd_spectra(rest, io);
    err << "unknown command: " << c << "\n";
    usage(err);
    return 2;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed JSON input: " << e.what() << "\n";
    return 2;
  } catch (const BudgetExceeded& e) {
    err << "error: budget exceeded: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace ughc::cli
