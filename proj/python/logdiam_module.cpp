#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <random>

#include "logdiam/certify.hpp"

namespace py = pybind11;
using namespace logdiam;
using nlohmann::json;

namespace {

using Rows = std::vector<std::vector<i64>>;

MatModQ to_mat(const Rows& rows, u64 q) { return MatModQ::from_raw(matrix_from_json(json(rows), q)); }

Rows to_rows(const MatModQ& m) { return matrix_to_json(m.raw()).get<Rows>(); }

FactoredModulus leveled(u64 q, int L) { return factorize(q).with_level(L); }

std::string check_seed_py(const Rows& g, u64 q, int L, const std::string& variant) {
  if (variant != "lower" && variant != "upper") throw ConfigError("variant must be lower or upper");
  const SeedCheck c = check_seed(to_mat(g, q), {variant == "lower" ? SeedVariant::lower : SeedVariant::upper, L, leveled(q, L)});
  return json{{"ok", c.ok}, {"diagnostic", c.diagnostic}, {"degenerate_primes", c.degenerate_primes}}.dump();
}

Rows sample_seed_py(int d, u64 q, int L, const std::string& variant, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return to_rows(sample_seed(d, leveled(q, L), variant == "upper" ? SeedVariant::upper : SeedVariant::lower, L, rng));
}

std::string decompose_py(const Rows& target, const Rows& g0, const Rows& g0p, u64 q, int L) {
  const auto ctx = DecompositionContext::make(to_mat(g0, q), to_mat(g0p, q), L);
  const MatModQ t = to_mat(target, q);
  const ConjugateWord w = step6_decompose(t, ctx);
  const VerifyResult v = verify_word(w, t);
  return json{{"target", target}, {"length", w.length()}, {"verified", v.ok}, {"word", word_to_json(w)}}.dump();
}

bool verify_decomposition_py(const std::string& cert) {
  const json j = json::parse(cert);
  const ConjugateWord w = word_from_json(j.at("word"));
  return static_cast<bool>(verify_word(w, MatModQ::from_raw(matrix_from_json(j.at("target"), w.context().q()))));
}

BfsOptions bfs(std::size_t budget, int threads) { return {budget, threads}; }

py::tuple diameter_scan_py(const std::string& spec, const std::vector<u64>& qs, std::size_t budget, int threads) {
  const ScanResult r = diameter_scan(genset_from_json(json::parse(spec)), qs, bfs(budget, threads));
  return py::make_tuple(scan_csv(r, true), scan_summary(r).dump());
}

py::tuple distance_py(const std::string& spec, u64 q, const std::string& target) {
  const GenSet s = genset_from_json(json::parse(spec));
  const DistanceResult r = bfs_distance(s, q, element_from_json(json::parse(target), s.kind(), s.dims(), q));
  return py::make_tuple(r.distance, r.word.indices);
}

std::string evaluate_py(const std::string& spec, u64 q, const std::vector<std::uint32_t>& word) {
  return element_to_json(evaluate_word(genset_from_json(json::parse(spec)), q, CayleyWord{word})).dump();
}

bool surjective_py(const std::string& spec, u64 q, std::size_t budget) {
  return surjectivity_check(genset_from_json(json::parse(spec)), q, bfs(budget, 1));
}

std::string group_order_py(const std::string& kind, const std::vector<int>& dims, u64 q) {
  return to_string(group_order(parse_group_kind(kind), dims, q));
}

py::tuple key_identity_py(const Rows& T, const std::vector<u64>& v, const std::vector<u64>& v0, u64 q) {
  const AffineModQ r = key_identity(to_mat(T, q), v, v0);
  return py::make_tuple(to_rows(r.linear), r.trans);
}

py::tuple translation_pair_py(const std::vector<u64>& v, const std::vector<u64>& v0, u64 q, int L) {
  const TranslationPair p = solve_translation_pair(v, v0, leveled(q, L));
  return py::make_tuple(to_rows(p.A), to_rows(p.B));
}

std::string certify_py(const std::string& spec, u64 q, int L, std::optional<std::string> target, std::size_t max_vertices) {
  const GenSet s = genset_from_json(json::parse(spec));
  const auto fm = leveled(q, L);
  SearchOptions so;
  so.max_vertices = max_vertices;
  so.max_radius = 64;
  const GroupElement t = target ? element_from_json(json::parse(*target), s.kind(), s.dims(), q) : element_identity(s.kind(), s.dims(), q);
  Certificate c{t, {}, {}, {}};
  json kit;
  if (s.kind() == GroupKind::SA) {
    const SaKit k = find_sa_kit(s, fm, so);
    kit = kit_to_json(k);
    c = SaCertifier(s, k).certify(std::get<AffineModQ>(t));
  } else {
    const ProductKit k = find_product_kit(s, fm, so);
    kit = kit_to_json(k);
    c = ProductCertifier(s, k).certify(std::get<ProductModQ>(t));
  }
  return json{{"kit", kit}, {"certificate", certificate_to_json(c)}}.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Exact SL_d(Z/qZ) arithmetic, Cayley graph diameters and generation certificates";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<BudgetError>(m, "BudgetError", base);
  py::register_exception<InternalError>(m, "InternalError", base);
  auto pre = py::register_exception<PreconditionError>(m, "PreconditionError", base);
  py::register_exception<TargetUnreachable>(m, "TargetUnreachable", base);
  py::register_exception<InheritanceFailure>(m, "InheritanceFailure", base);
  py::register_exception<NotAUnit>(m, "NotAUnit", pre);
  py::register_exception<ModulusMismatch>(m, "ModulusMismatch", pre);

  m.def("factorize", [](u64 n) {
    std::vector<std::pair<u64, int>> out;
    const auto fm = factorize(n);
    for (const auto& f : fm.factors()) out.emplace_back(f.p, f.alpha);
    return out;
  });
  m.def("inv_mod", &inv_mod, py::arg("a"), py::arg("m"));
  m.def("group_order", &group_order_py, py::arg("kind"), py::arg("dims"), py::arg("q"));
  m.def("check_seed", &check_seed_py, py::arg("g"), py::arg("q"), py::arg("L"), py::arg("variant"));
  m.def("sample_seed", &sample_seed_py, py::arg("d"), py::arg("q"), py::arg("L"), py::arg("variant"), py::arg("seed") = 1);
  m.def("decompose", &decompose_py, py::arg("target"), py::arg("g0"), py::arg("g0p"), py::arg("q"), py::arg("L"));
  m.def("verify_decomposition", &verify_decomposition_py, py::arg("certificate"));
  m.def("diameter_scan", &diameter_scan_py, py::arg("spec"), py::arg("qs"), py::arg("budget") = std::size_t{2} << 30, py::arg("threads") = 1);
  m.def("distance", &distance_py, py::arg("spec"), py::arg("q"), py::arg("target"));
  m.def("evaluate", &evaluate_py, py::arg("spec"), py::arg("q"), py::arg("word"));
  m.def("surjective", &surjective_py, py::arg("spec"), py::arg("q"), py::arg("budget") = std::size_t{2} << 30);
  m.def("key_identity", &key_identity_py, py::arg("T"), py::arg("v"), py::arg("v0"), py::arg("q"));
  m.def("solve_translation_pair", &translation_pair_py, py::arg("v"), py::arg("v0"), py::arg("q"), py::arg("L"));
  m.def("certify", &certify_py, py::arg("spec"), py::arg("q"), py::arg("L"), py::arg("target") = std::nullopt,
        py::arg("max_vertices") = std::size_t{1} << 20);
}
