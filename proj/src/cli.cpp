#include "logdiam/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>

#include "logdiam/certify.hpp"

namespace logdiam {

using nlohmann::json;

namespace {

struct Options {
  std::string spec;
  std::string q_text;
  std::optional<u64> q;
  int L = 2;
  int d = 2;
  std::string seeds = "search";
  std::string target;
  std::string mode;
  std::string out;
  std::string verify;
  std::size_t budget_mem = std::size_t{2} << 30;
  int threads = 1;
  std::uint64_t rng_seed = 1;
  bool stable = false;
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse '" + path + "': " + e.what());
  }
}

void emit(const std::string& text, const Options& o, std::ostream& out) {
  if (o.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(o.out);
  if (!f) throw ConfigError("cannot write '" + o.out + "'");
  f << text;
}

BfsOptions bfs_options(const Options& o) {
  if (o.budget_mem == 0) throw ConfigError("--budget-mem must be positive");
  if (o.threads < 1) throw ConfigError("--threads must be at least 1");
  return {o.budget_mem, o.threads};
}

u64 single_q(const Options& o) {
  if (!o.q) throw ConfigError("--q is required");
  if (*o.q < 2) throw ConfigError("--q must be at least 2 here");
  return *o.q;
}

struct Seeds {
  MatModQ g0, g0p;
};

Seeds load_seeds(const Options& o, const FactoredModulus& fm) {
  if (o.seeds == "search") {
    std::mt19937_64 rng(o.rng_seed);
    MatModQ g0 = sample_seed(o.d, fm, SeedVariant::lower, o.L, rng);
    MatModQ g0p = sample_seed(o.d, fm, SeedVariant::upper, o.L, rng);
    return {std::move(g0), std::move(g0p)};
  }
  const json j = read_json(o.seeds);
  try {
    return {MatModQ::from_raw(matrix_from_json(j.at("g0"), fm.q())), MatModQ::from_raw(matrix_from_json(j.at("g0p"), fm.q()))};
  } catch (const json::exception& e) {
    throw ConfigError("seeds file needs \"g0\" and \"g0p\": " + std::string(e.what()));
  }
}

json seed_check_json(const SeedCheck& c) {
  return {{"ok", c.ok}, {"diagnostic", c.diagnostic}, {"degenerate_primes", c.degenerate_primes}};
}

// ---------------------------------------------------------------- diam

int cmd_diam(const Options& o, std::ostream& out, std::ostream& err) {
  const GenSet s = load_genset(o.spec);
  const auto qs = parse_q_list(o.q_text);
  const ScanResult r = diameter_scan(s, qs, bfs_options(o));
  const std::string csv = scan_csv(r, o.stable);
  const std::string summary = scan_summary(r).dump(2) + "\n";
  emit(csv, o, out);
  if (o.out.empty()) {
    err << summary;
  } else {
    std::ofstream f(o.out + ".summary.json");
    if (!f) throw ConfigError("cannot write '" + o.out + ".summary.json'");
    f << summary;
  }
  for (const auto& f : r.failures) err << "q = " << f.q << ": " << f.reason << "\n";
  return r.failures.empty() ? exit_ok : exit_budget;
}

// ---------------------------------------------------------------- surjectivity

int cmd_surjectivity(const Options& o, std::ostream& out, std::ostream&) {
  const GenSet s = load_genset(o.spec);
  const BfsOptions bfs = bfs_options(o);
  std::ostringstream csv;
  csv << "q,order,closure,surjective\n";
  for (u64 q : parse_q_list(o.q_text)) {
    const u128 order = group_order(s.kind(), s.dims(), q);
    const std::size_t closure = enumerate_group(s, q, bfs).size();
    csv << q << ',' << to_string(order) << ',' << closure << ',' << (u128{closure} == order ? "true" : "false") << '\n';
  }
  emit(csv.str(), o, out);
  return exit_ok;
}

// ---------------------------------------------------------------- check-seed

int cmd_check_seed(const Options& o, std::ostream& out, std::ostream&) {
  const auto fm = factorize(single_q(o)).with_level(o.L);
  const Seeds seeds = load_seeds(o, fm);
  const SeedCheck lower = check_seed(seeds.g0, {SeedVariant::lower, o.L, fm});
  const SeedCheck upper = check_seed(seeds.g0p, {SeedVariant::upper, o.L, fm});
  const json j = {{"q", fm.q()},
                  {"L", o.L},
                  {"g0", matrix_to_json(seeds.g0.raw())},
                  {"g0p", matrix_to_json(seeds.g0p.raw())},
                  {"g0_check", seed_check_json(lower)},
                  {"g0p_check", seed_check_json(upper)}};
  emit(j.dump(2) + "\n", o, out);
  return lower && upper ? exit_ok : exit_verify;
}

// ---------------------------------------------------------------- decompose

int replay_decomposition(const Options& o, std::ostream& out) {
  const json j = read_json(o.verify);
  try {
    const ConjugateWord w = word_from_json(j.at("word"));
    const MatModQ target = MatModQ::from_raw(matrix_from_json(j.at("target"), w.context().q()));
    const VerifyResult v = verify_word(w, target);
    out << json{{"verified", v.ok}, {"diagnostic", v.detail}}.dump(2) << "\n";
    return v.ok ? exit_ok : exit_verify;
  } catch (const json::exception& e) {
    throw ConfigError("malformed decomposition certificate: " + std::string(e.what()));
  }
}

int cmd_decompose(const Options& o, std::ostream& out, std::ostream& err) {
  if (!o.verify.empty()) return replay_decomposition(o, out);
  const u64 q = single_q(o);
  const auto fm = factorize(q).with_level(o.L);
  const Seeds seeds = load_seeds(o, fm);
  const auto ctx = DecompositionContext::make(seeds.g0, seeds.g0p, o.L);
  MatModQ target = MatModQ::identity(ctx.dim(), q);
  if (!o.target.empty()) {
    json t = read_json(o.target);
    if (t.is_object()) t = t.value("matrix", json());
    target = MatModQ::from_raw(matrix_from_json(t, q));
  }
  const u64 q2 = fm.q2();
  if (!is_congruent_identity(target, q2)) {
    throw PreconditionError("target is not I mod q2 = " + std::to_string(q2) + ":\n" + to_string(reduce_level(target, q2).raw()));
  }
  const ConjugateWord w = step6_decompose(target, ctx);
  const VerifyResult v = verify_word(w, target);
  const json j = {{"kind", "decomposition"},
                  {"q", q},
                  {"L", o.L},
                  {"target", matrix_to_json(target.raw())},
                  {"length", w.length()},
                  {"bound", word_length_bound(ctx.dim())},
                  {"verified", v.ok},
                  {"word", word_to_json(w)}};
  emit(j.dump(2) + "\n", o, out);
  if (!v.ok) err << "verification failed: " << v.detail << "\n";
  return v.ok ? exit_ok : exit_verify;
}

// ---------------------------------------------------------------- certify

/// Replays a certificate by multiplying the reduced generators: genset and
/// matrix arithmetic only.
int replay_certificate(const Options& o, std::ostream& out) {
  const json j = read_json(o.verify);
  try {
    const GenSet s = genset_from_json(j.at("spec"));
    const u64 q = j.at("q").get<u64>();
    const json& c = j.at("certificate");
    const GroupElement target = element_from_json(c.at("target"), s.kind(), s.dims(), q);
    GroupElement acc = element_identity(s.kind(), s.dims(), q);
    std::size_t n = 0;
    for (const auto& i : c.at("word")) {
      const auto k = i.get<std::size_t>();
      if (k >= s.size()) throw ConfigError("generator index " + std::to_string(k) + " out of range");
      acc = element_mul(acc, reduce_generator(s, k, q));
      ++n;
    }
    const bool ok = acc == target && n == c.at("length").get<std::size_t>();
    out << json{{"verified", ok}, {"length", n}}.dump(2) << "\n";
    return ok ? exit_ok : exit_verify;
  } catch (const json::exception& e) {
    throw ConfigError("malformed certificate: " + std::string(e.what()));
  }
}

GroupElement certify_target(const Options& o, const GenSet& s, const FactoredModulus& fm) {
  const u64 q = fm.q();
  if (o.target.empty()) return element_identity(s.kind(), s.dims(), q);
  if (o.target == "random") {
    std::mt19937_64 rng(o.rng_seed);
    const u64 q2 = fm.q2();
    if (s.kind() == GroupKind::SA) {
      return AffineModQ::make(sample_congruence_element(s.dim(), q, q2, rng), std::vector<u64>(static_cast<std::size_t>(s.dim()), 0));
    }
    MatModQ a = sample_congruence_element(s.dim(), q, q2, rng);
    MatModQ b = sample_congruence_element(s.dim(), q, q2, rng);
    return ProductModQ::make({std::move(a), std::move(b)});
  }
  return element_from_json(read_json(o.target), s.kind(), s.dims(), q);
}

int cmd_certify(const Options& o, std::ostream& out, std::ostream& err) {
  if (!o.verify.empty()) return replay_certificate(o, out);
  const GenSet s = load_genset(o.spec);
  const std::string mode = o.mode.empty() ? (s.kind() == GroupKind::SA ? "sa" : "product") : o.mode;
  if (mode != "sa" && mode != "product") throw ConfigError("--mode must be sa or product");
  if ((mode == "sa") != (s.kind() == GroupKind::SA)) throw ConfigError("--mode " + mode + " does not match the spec kind " + to_string(s.kind()));
  const u64 q = single_q(o);
  const auto fm = factorize(q).with_level(o.L);
  const BfsOptions bfs = bfs_options(o);

  SearchOptions search;
  search.bfs = bfs;
  search.seed = o.rng_seed;
  search.max_radius = 64;
  search.max_vertices = std::max<std::size_t>(1, o.budget_mem / bytes_per_vertex(s, q));
  CertifyOptions copts;
  copts.bfs = bfs;

  const GroupElement target = certify_target(o, s, fm);
  json kit_json;
  Certificate cert{target, {}, {}, {}};
  try {
    if (mode == "sa") {
      const SaKit kit = o.seeds == "search" ? find_sa_kit(s, fm, search) : sa_kit_from_json(read_json(o.seeds), s);
      kit_json = kit_to_json(kit);
      cert = SaCertifier(s, kit, copts).certify(std::get<AffineModQ>(target));
    } else {
      const ProductKit kit = o.seeds == "search" ? find_product_kit(s, fm, search) : product_kit_from_json(read_json(o.seeds), s);
      kit_json = kit_to_json(kit);
      cert = ProductCertifier(s, kit, copts).certify(std::get<ProductModQ>(target));
    }
  } catch (const BudgetError& e) {
    err << json{{"status", "budget"}, {"mode", mode}, {"q", q}, {"L", o.L}, {"report", e.what()}}.dump(2) << "\n";
    throw;
  }
  const bool evaluates = evaluate_word(s, q, cert.word) == target;
  const json j = {{"kind", "certificate"},
                  {"mode", mode},
                  {"q", q},
                  {"L", o.L},
                  {"spec", genset_to_json(s)},
                  {"kit", kit_json},
                  {"verified", evaluates && cert.account.within()},
                  {"certificate", certificate_to_json(cert)}};
  emit(j.dump(2) + "\n", o, out);
  if (!evaluates) err << "certificate does not evaluate to its target\n";
  if (!cert.account.within()) err << "certificate length " << cert.account.length << " exceeds the bound " << cert.account.bound << "\n";
  return evaluates && cert.account.within() ? exit_ok : exit_verify;
}

}  // namespace

std::vector<u64> parse_q_list(const std::string& text) {
  std::vector<u64> out;
  auto number = [&](const std::string& t) -> u64 {
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) throw ConfigError("bad q value '" + t + "' in '" + text + "'");
    try {
      const u64 v = std::stoull(t);
      if (v == 0) throw ConfigError("q values must be at least 1");
      return v;
    } catch (const std::out_of_range&) {
      throw ConfigError("q value '" + t + "' is too large");
    }
  };
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto dots = part.find("..");
    if (dots == std::string::npos) {
      out.push_back(number(part));
      continue;
    }
    const u64 lo = number(part.substr(0, dots)), hi = number(part.substr(dots + 2));
    if (lo > hi) throw ConfigError("empty q range '" + part + "'");
    if (hi - lo > (u64{1} << 24)) throw ConfigError("q range '" + part + "' is too long");
    for (u64 q = lo; q <= hi; ++q) out.push_back(q);
  }
  if (out.empty()) throw ConfigError("no q values given");
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cayley graph diameters and bounded-generation certificates for SL_d(Z/qZ)", "logdiam"};
  app.require_subcommand(1);
  Options o;

  auto budget = [&](CLI::App* c) {
    c->add_option("--budget-mem", o.budget_mem, "memory budget in bytes");
    c->add_option("--threads", o.threads, "BFS worker threads");
  };
  auto level = [&](CLI::App* c) {
    c->add_option("--q", o.q, "modulus")->required();
    c->add_option("--L", o.L, "level L >= 2");
  };

  auto* diam = app.add_subcommand("diam", "diameter scan, CSV plus a JSON summary");
  diam->add_option("--spec", o.spec, "group spec JSON")->required();
  diam->add_option("--q", o.q_text, "moduli, e.g. 2..64 or 2,3,5")->required();
  diam->add_option("--out", o.out, "CSV path; the summary goes to <out>.summary.json");
  diam->add_flag("--stable", o.stable, "write 0 in the ms column");
  budget(diam);

  auto* surj = app.add_subcommand("surjectivity", "closure order against the closed formula");
  surj->add_option("--spec", o.spec, "group spec JSON")->required();
  surj->add_option("--q", o.q_text, "moduli")->required();
  surj->add_option("--out", o.out, "CSV path");
  budget(surj);

  auto* check = app.add_subcommand("check-seed", "check (or sample) a lower/upper seed pair");
  level(check);
  check->add_option("--d", o.d, "dimension when sampling");
  check->add_option("--seeds", o.seeds, "seeds JSON {\"g0\", \"g0p\"} or 'search'");
  check->add_option("--rng-seed", o.rng_seed, "sampling seed");
  check->add_option("--out", o.out, "output path");

  auto* dec = app.add_subcommand("decompose", "conjugate-word decomposition of a target in G(q2)");
  dec->add_option("--q", o.q, "modulus");
  dec->add_option("--L", o.L, "level L >= 2");
  dec->add_option("--d", o.d, "dimension for sampled seeds and the identity target");
  dec->add_option("--seeds", o.seeds, "seeds JSON or 'search'");
  dec->add_option("--target", o.target, "target matrix JSON (default I)");
  dec->add_option("--rng-seed", o.rng_seed, "seed sampling");
  dec->add_option("--out", o.out, "certificate path");
  dec->add_option("--verify", o.verify, "replay a decomposition certificate");

  auto* cert = app.add_subcommand("certify", "generator-word certificate for SA_d or SL_d x SL_d");
  cert->add_option("--spec", o.spec, "group spec JSON");
  cert->add_option("--q", o.q, "modulus");
  cert->add_option("--L", o.L, "level L >= 2");
  cert->add_option("--mode", o.mode, "sa or product (default from the spec)");
  cert->add_option("--seeds", o.seeds, "kit JSON or 'search'");
  cert->add_option("--target", o.target, "target element JSON, 'random' (default identity)");
  cert->add_option("--rng-seed", o.rng_seed, "search and sampling seed");
  cert->add_option("--out", o.out, "certificate path");
  cert->add_option("--verify", o.verify, "replay a certificate");
  budget(cert);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_config;
  }

  try {
    if (*diam) return cmd_diam(o, out, err);
    if (*surj) return cmd_surjectivity(o, out, err);
    if (*check) return cmd_check_seed(o, out, err);
    if (*dec) return cmd_decompose(o, out, err);
    if (cert->parsed()) {
      if (o.verify.empty() && o.spec.empty()) throw ConfigError("--spec is required");
      return cmd_certify(o, out, err);
    }
    return exit_config;
  } catch (const InheritanceFailure& e) {
    err << "inheritance check failed: " << e.what() << "\n";
    return exit_verify;
  } catch (const PreconditionError& e) {
    err << "precondition: " << e.what() << "\n";
    return exit_config;
  } catch (const ConfigError& e) {
    err << "config: " << e.what() << "\n";
    return exit_config;
  } catch (const TargetUnreachable& e) {
    err << "unreachable: " << e.what() << "\n";
    return exit_config;
  } catch (const BudgetError& e) {
    err << "budget: " << e.what() << "\n";
    return exit_budget;
  } catch (const std::exception& e) {
    err << "internal: " << e.what() << "\n";
    return exit_internal;
  }
}

}  // namespace logdiam
