#include "rwre/env_json.hpp"

#include "rwre/errors.hpp"
#include "rwre/rational.hpp"

namespace rwre {

using nlohmann::json;

namespace {

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("environment: missing field '") + key + "'");
  return j.at(key);
}

LatticeVec vec_from_json(int dim, const json& j, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw ConfigError(std::string(what) + ": expected an integer array of length " + std::to_string(dim));
  LatticeVec v(dim);
  for (int i = 0; i < dim; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number_integer()) throw ConfigError(std::string(what) + ": non-integer entry");
    v[i] = j[static_cast<std::size_t>(i)].get<std::int64_t>();
  }
  return v;
}

json vec_to_json(const LatticeVec& v) {
  json a = json::array();
  for (int i = 0; i < v.dim(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace

JumpDistribution law_from_json(int dim, const json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("law: expected a non-empty array of {y, p}");
  bool any_exact = false;
  for (const auto& e : j) any_exact = any_exact || field(e, "p").is_string();
  try {
    if (any_exact) {
      std::vector<std::pair<LatticeVec, Rational>> entries;
      for (const auto& e : j) {
        const auto& p = field(e, "p");
        std::optional<Rational> q;
        if (p.is_string()) q = parse_rational(p.get<std::string>());
        else if (p.is_number()) q = rational_from_shortest_decimal(p.get<double>());
        if (!q) throw ConfigError("law: unreadable probability " + p.dump());
        entries.emplace_back(vec_from_json(dim, field(e, "y"), "law.y"), *q);
      }
      return JumpDistribution(dim, std::move(entries));
    }
    std::vector<JumpEntry> entries;
    for (const auto& e : j) {
      const auto& p = field(e, "p");
      if (!p.is_number()) throw ConfigError("law: probability must be a number or a \"p/q\" string");
      entries.push_back({vec_from_json(dim, field(e, "y"), "law.y"), p.get<double>()});
    }
    return JumpDistribution(dim, std::move(entries));
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("law: ") + e.what());
  }
}

json law_to_json(const JumpDistribution& law) {
  json a = json::array();
  for (std::size_t i = 0; i < law.size(); ++i) {
    const auto& e = law.entries()[i];
    json p = e.prob;
    if (law.has_exact() && law.exact_probs()[i] != rational_from_shortest_decimal(e.prob))
      p = to_string(law.exact_probs()[i]);
    a.push_back({{"y", vec_to_json(e.displacement)}, {"p", p}});
  }
  return a;
}

Environment environment_from_json(const json& j) {
  const auto& dj = field(j, "dim");
  if (!dj.is_number_integer()) throw ConfigError("environment: dim must be an integer");
  const int dim = dj.get<int>();
  if (dim < 1 || dim > kMaxDim) throw ConfigError("environment: dim must be in 1.." + std::to_string(kMaxDim));
  const std::string kind = field(j, "kind").get<std::string>();

  try {
    Environment env = [&] {
      if (kind == "periodic") {
        const auto& ej = field(j, "extents");
        std::vector<std::int64_t> extents = ej.get<std::vector<std::int64_t>>();
        std::vector<JumpDistribution> table;
        for (const auto& law : field(j, "table")) table.push_back(law_from_json(dim, law));
        return Environment::periodic(std::move(extents), std::move(table));
      }
      if (kind == "homogeneous") {
        return Environment::homogeneous(law_from_json(dim, field(j, "law")));
      }
      if (kind == "iid") {
        std::vector<WeightedLaw> family;
        for (const auto& f : field(j, "family"))
          family.push_back({law_from_json(dim, field(f, "law")), field(f, "weight").get<double>()});
        return Environment::seeded_iid(dim, std::move(family), field(j, "seed").get<std::uint64_t>());
      }
      if (kind == "column_ab") {
        if (dim != 2) throw ConfigError("environment: column_ab needs dim 2");
        return Environment::column_ab(field(j, "prob_a").get<double>(), field(j, "seed").get<std::uint64_t>());
      }
      if (kind == "column_ab_periodic") {
        if (dim != 2) throw ConfigError("environment: column_ab_periodic needs dim 2");
        return Environment::column_ab_periodic(field(j, "pattern").get<std::string>(),
                                               field(j, "height").get<std::int64_t>());
      }
      throw ConfigError("environment: unknown kind '" + kind + "'");
    }();
    if (j.contains("offset")) env = env.shifted(vec_from_json(dim, j.at("offset"), "offset"));
    return env;
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("environment: ") + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("environment: ") + e.what());
  }
}

json environment_to_json(const Environment& env) {
  json j{{"dim", env.dim()}};
  switch (env.kind()) {
    case EnvKind::periodic: {
      const Environment base = env.shifted(-env.offset());
      j["kind"] = "periodic";
      j["extents"] = std::vector<std::int64_t>(env.extents().begin(), env.extents().end());
      json table = json::array();
      for (std::size_t k = 0; k < base.torus_size(); ++k) table.push_back(law_to_json(base.dist_at(base.torus_site(k))));
      j["table"] = std::move(table);
      break;
    }
    case EnvKind::seeded_iid: {
      j["kind"] = "iid";
      json fam = json::array();
      for (std::size_t i = 0; i < env.laws().size(); ++i)
        fam.push_back({{"weight", env.family_weights()[i]}, {"law", law_to_json(env.laws()[i])}});
      j["family"] = std::move(fam);
      j["seed"] = env.master_seed();
      break;
    }
    case EnvKind::column_ab:
      j["kind"] = "column_ab";
      j["prob_a"] = env.prob_a();
      j["seed"] = env.master_seed();
      break;
  }
  if (!env.offset().is_zero()) j["offset"] = vec_to_json(env.offset());
  return j;
}

json sequence_to_json(const DisplacementSequence& seq) {
  json a = json::array();
  for (const auto& y : seq) a.push_back(vec_to_json(y));
  return a;
}

DisplacementSequence sequence_from_json(int dim, const json& j) {
  if (!j.is_array()) throw ConfigError("displacement sequence must be an array");
  DisplacementSequence seq;
  for (const auto& y : j) seq.push_back(vec_from_json(dim, y, "displacement"));
  return seq;
}

json interval_to_json(const RationalInterval& iv) { return {{"lo", to_string(iv.lo)}, {"hi", to_string(iv.hi)}}; }

}  // namespace rwre
