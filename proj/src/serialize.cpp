#include "soa/serialize.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace soa {

using nlohmann::json;

namespace {

constexpr std::int64_t kExactIntLimit = (std::int64_t{1} << 53);

[[noreturn]] void bad(const std::string& what) {
  throw std::invalid_argument("invalid file content: " + what);
}

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) bad(std::string("missing field \"") + key + "\"");
  return *it;
}

int int_field(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number_integer()) bad(std::string("field \"") + key + "\" must be an integer");
  return v.get<int>();
}

std::vector<int> index_list(const json& j, const char* what) {
  if (!j.is_array()) bad(std::string(what) + " must be an array of indices");
  std::vector<int> out;
  for (const auto& e : j) {
    if (!e.is_number_integer()) bad(std::string(what) + " must contain integers");
    out.push_back(e.get<int>());
  }
  return out;
}

Coalition coalition_field(const json& j, const char* key, int d) {
  const std::vector<int> idx = index_list(field(j, key), key);
  return Coalition::from_indices(d, idx);
}

json members_json(const Coalition& u) {
  json out = json::array();
  for (int i : u.members()) out.push_back(i);
  return out;
}

}  // namespace

json rational_to_json(const Rational& r) {
  if (r.is_integer() && r.num() <= kExactIntLimit && r.num() >= -kExactIntLimit)
    return json(static_cast<std::int64_t>(r.num()));
  return json(r.to_string());
}

Rational rational_from_json(const json& j) {
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (j.is_number_float()) return Rational::from_double(j.get<double>());
  if (j.is_string()) return Rational::parse(j.get<std::string>());
  bad("expected a number or \"p/q\" string");
}

json game_to_json(const Game<Rational>& game) {
  json values = json::object();
  const int d = game.dim();
  for (std::uint32_t m = 0; m < game.coalition_count(); ++m)
    values[Coalition(d, m).key()] = rational_to_json(game.value(m));
  return json{{"d", d}, {"values", values}};
}

Game<Rational> game_from_json(const json& j) {
  const int d = int_field(j, "d");
  if (d < 1 || d > Coalition::kMaxDim) bad("game dimension must lie in [1, 24]");
  const json& values = field(j, "values");
  if (!values.is_object()) bad("\"values\" must be an object");
  Game<Rational> game(d);
  for (const auto& [key, v] : values.items()) {
    std::vector<int> idx;
    std::size_t pos = 0;
    while (pos < key.size()) {
      std::size_t next = key.find(',', pos);
      if (next == std::string::npos) next = key.size();
      idx.push_back(std::stoi(key.substr(pos, next - pos)));
      pos = next + 1;
    }
    game.set_value(Coalition::from_indices(d, idx), rational_from_json(v));
  }
  return game;
}

json distribution_to_json(const DistributionSpec& dist) {
  json out = json::object();
  if (dist.is_independent_product()) {
    json ms = json::array();
    for (const auto& m : dist.marginals()) {
      switch (m.type) {
        case Marginal::Type::uniform:
          ms.push_back({{"type", "uniform"}, {"a", m.a}, {"b", m.b}});
          break;
        case Marginal::Type::normal:
          ms.push_back({{"type", "normal"}, {"mu", m.mu}, {"sigma", m.sigma}});
          break;
        case Marginal::Type::bernoulli:
          ms.push_back({{"type", "bernoulli"}, {"p", rational_to_json(m.p)}});
          break;
        case Marginal::Type::discrete: {
          json vals = json::array(), probs = json::array();
          for (const auto& v : m.discrete.values) vals.push_back(rational_to_json(v));
          for (const auto& p : m.discrete.probs) probs.push_back(rational_to_json(p));
          ms.push_back({{"type", "discrete"}, {"values", vals}, {"probs", probs}});
          break;
        }
      }
    }
    out["marginals"] = ms;
  } else {
    const MvNormal& n = dist.normal();
    json mean = json::array(), cov = json::array();
    for (Eigen::Index i = 0; i < n.mean.size(); ++i) mean.push_back(n.mean(i));
    for (Eigen::Index i = 0; i < n.cov.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index k = 0; k < n.cov.cols(); ++k) row.push_back(n.cov(i, k));
      cov.push_back(row);
    }
    out["mvnormal"] = json{{"mean", mean}, {"cov", cov}};
  }
  if (dist.has_explicit_ordering()) {
    json ord = json::array();
    for (int i : dist.ordering()) ord.push_back(i);
    out["ordering"] = ord;
  }
  return out;
}

DistributionSpec distribution_from_json(const json& j) {
  if (!j.is_object()) bad("distribution must be an object");
  std::optional<DistributionSpec> dist;
  if (j.contains("marginals")) {
    const json& ms = j["marginals"];
    if (!ms.is_array() || ms.empty()) bad("\"marginals\" must be a nonempty array");
    std::vector<Marginal> out;
    for (const auto& m : ms) {
      const json& t = field(m, "type");
      if (!t.is_string()) bad("marginal \"type\" must be a string");
      const std::string type = t.get<std::string>();
      if (type == "uniform") {
        out.push_back(Marginal::uniform_on(field(m, "a").get<double>(),
                                           field(m, "b").get<double>()));
      } else if (type == "normal") {
        out.push_back(Marginal::normal_with(field(m, "mu").get<double>(),
                                            field(m, "sigma").get<double>()));
      } else if (type == "bernoulli") {
        out.push_back(Marginal::bernoulli_with(rational_from_json(field(m, "p"))));
      } else if (type == "discrete") {
        DiscreteMarginal dm;
        for (const auto& v : field(m, "values")) dm.values.push_back(rational_from_json(v));
        for (const auto& p : field(m, "probs")) dm.probs.push_back(rational_from_json(p));
        out.push_back(Marginal::discrete_with(std::move(dm)));
      } else {
        bad("unknown marginal type \"" + type + "\"");
      }
    }
    dist = DistributionSpec::independent(std::move(out));
  } else if (j.contains("mvnormal")) {
    const json& n = j["mvnormal"];
    const json& mean = field(n, "mean");
    const json& cov = field(n, "cov");
    if (!mean.is_array() || !cov.is_array()) bad("mvnormal mean/cov must be arrays");
    const Eigen::Index d = static_cast<Eigen::Index>(mean.size());
    Eigen::VectorXd mu(d);
    Eigen::MatrixXd sigma(d, d);
    for (Eigen::Index i = 0; i < d; ++i) mu(i) = mean[i].get<double>();
    if (static_cast<Eigen::Index>(cov.size()) != d) bad("cov must be d x d");
    for (Eigen::Index i = 0; i < d; ++i) {
      if (static_cast<Eigen::Index>(cov[i].size()) != d) bad("cov must be d x d");
      for (Eigen::Index k = 0; k < d; ++k) sigma(i, k) = cov[i][k].get<double>();
    }
    dist = DistributionSpec::mvnormal(std::move(mu), std::move(sigma));
  } else {
    bad("distribution needs \"marginals\" or \"mvnormal\"");
  }
  if (j.contains("ordering")) dist->set_ordering(index_list(j["ordering"], "\"ordering\""));
  return *dist;
}

json pce_to_json(const Pce& pce) {
  json coeffs = json::array();
  for (const auto& [alpha, y] : pce.coeffs) {
    json a = json::array();
    for (int k = 0; k < alpha.dim(); ++k) a.push_back(alpha[k]);
    coeffs.push_back({{"alpha", a}, {"y", y}});
  }
  return json{{"d", pce.d},
              {"distribution", distribution_to_json(pce.distribution)},
              {"coefficients", coeffs},
              {"sigma2_estimate", pce.variance_estimate},
              {"converged", pce.converged},
              {"epsilon", pce.epsilon}};
}

Pce pce_from_json(const json& j) {
  Pce pce;
  pce.d = int_field(j, "d");
  if (pce.d < 1 || pce.d > Coalition::kMaxDim) bad("pce dimension must lie in [1, 24]");
  pce.distribution = distribution_from_json(field(j, "distribution"));
  if (pce.distribution.dim() != pce.d) bad("pce distribution dimension mismatch");
  const json& coeffs = field(j, "coefficients");
  if (!coeffs.is_array()) bad("\"coefficients\" must be an array");
  for (const auto& c : coeffs) {
    const std::vector<int> a = index_list(field(c, "alpha"), "\"alpha\"");
    if (static_cast<int>(a.size()) != pce.d) bad("coefficient \"alpha\" dimension mismatch");
    const json& y = field(c, "y");
    if (!y.is_number()) bad("coefficient \"y\" must be a number");
    if (!pce.coeffs.emplace(MultiIndex(a), y.get<double>()).second)
      bad("duplicate coefficient index");
  }
  pce.coeffs.emplace(MultiIndex::zero(pce.d), 0.0);  // keeps the mean term present
  pce.variance_estimate = field(j, "sigma2_estimate").get<double>();
  pce.converged = field(j, "converged").get<bool>();
  pce.epsilon = field(j, "epsilon").get<double>();
  return pce;
}

namespace {

std::map<ElementaryTable::Key, Rational> all_entries(const ElementaryTable& table) {
  std::map<ElementaryTable::Key, Rational> merged = table.entries();
  merged.insert(table.extras().begin(), table.extras().end());
  return merged;
}

}  // namespace

json table_to_json(const ElementaryTable& table) {
  json entries = json::array();
  const int d = table.dim();
  for (const auto& [key, value] : all_entries(table)) {
    entries.push_back({{"s", members_json(Coalition(d, key.first))},
                       {"u", members_json(Coalition(d, key.second))},
                       {"value", value.to_string()}});
  }
  return json{{"format_version", 1},
              {"d", d},
              {"max_order", table.max_order()},
              {"entries", entries}};
}

ElementaryTable table_from_json(const json& j) {
  if (int_field(j, "format_version") != 1) bad("unsupported table format version");
  const int d = int_field(j, "d");
  const int max_order = int_field(j, "max_order");
  ElementaryTable table(d, max_order);
  for (const auto& e : field(j, "entries")) {
    const Coalition s = coalition_field(e, "s", d);
    const Coalition u = coalition_field(e, "u", d);
    const json& v = field(e, "value");
    if (!v.is_string()) bad("table \"value\" must be a \"p/q\" string");
    table.insert(s, u, Rational::parse(v.get<std::string>()));
  }
  return table;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void put_i64(std::vector<std::uint8_t>& out, std::int64_t v) {
  put_u64(out, static_cast<std::uint64_t>(v));
}

struct ByteReader {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;

  std::uint32_t u32() {
    if (pos + 4 > bytes.size()) bad("truncated binary table");
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t{bytes[pos++]} << (8 * k);
    return v;
  }
  std::uint64_t u64() {
    if (pos + 8 > bytes.size()) bad("truncated binary table");
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= std::uint64_t{bytes[pos++]} << (8 * k);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
};

std::int64_t to_i64(__int128 v) {
  if (v > std::numeric_limits<std::int64_t>::max() ||
      v < std::numeric_limits<std::int64_t>::min())
    throw std::overflow_error("table value does not fit the binary format");
  return static_cast<std::int64_t>(v);
}

}  // namespace

std::vector<std::uint8_t> table_to_binary(const ElementaryTable& table) {
  const auto merged = all_entries(table);
  std::vector<std::uint8_t> out = {'S', 'O', 'A', 'T'};
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(table.dim()));
  put_u32(out, static_cast<std::uint32_t>(table.max_order()));
  put_u64(out, merged.size());
  for (const auto& [key, value] : merged) {
    put_u32(out, key.first);
    put_u32(out, key.second);
    put_i64(out, to_i64(value.num()));
    put_i64(out, to_i64(value.den()));
  }
  return out;
}

ElementaryTable table_from_binary(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || bytes[0] != 'S' || bytes[1] != 'O' || bytes[2] != 'A' ||
      bytes[3] != 'T')
    bad("not a binary table file");
  ByteReader r{bytes, 4};
  if (r.u32() != 1) bad("unsupported table format version");
  const int d = static_cast<int>(r.u32());
  const int max_order = static_cast<int>(r.u32());
  const std::uint64_t count = r.u64();
  ElementaryTable table(d, max_order);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t s = r.u32();
    const std::uint32_t u = r.u32();
    const std::int64_t num = r.i64();
    const std::int64_t den = r.i64();
    table.insert(Coalition(d, s), Coalition(d, u), Rational(num, den));
  }
  if (r.pos != bytes.size()) bad("trailing bytes in binary table");
  return table;
}

ModelFile model_from_json(const json& j) {
  ModelFile mf;
  mf.d = int_field(j, "d");
  if (mf.d < 1 || mf.d > Coalition::kMaxDim) bad("model dimension must lie in [1, 24]");
  if (j.contains("inputs")) {
    const json& names = j["inputs"];
    if (!names.is_array()) bad("\"inputs\" must be an array of names");
    for (const auto& n : names) {
      if (!n.is_string()) bad("\"inputs\" must be an array of names");
      mf.inputs.push_back(n.get<std::string>());
    }
    if (static_cast<int>(mf.inputs.size()) != mf.d)
      bad("\"inputs\" must list one name per dimension");
  }
  const json& dist = field(j, "distribution");
  if (dist.is_object() && dist.contains("joint_pmf")) {
    JointPmf pmf;
    pmf.d = mf.d;
    for (const auto& row : dist["joint_pmf"]) {
      const json& x = field(row, "x");
      if (!x.is_array()) bad("joint pmf \"x\" must be an array");
      std::vector<Rational> point;
      for (const auto& v : x) point.push_back(rational_from_json(v));
      pmf.rows.emplace_back(std::move(point), rational_from_json(field(row, "p")));
    }
    mf.joint_pmf = std::move(pmf);
  } else {
    mf.distribution = distribution_from_json(dist);
    if (mf.distribution->dim() != mf.d) bad("distribution dimension mismatch");
  }
  const json& expr = field(j, "expression");
  if (!expr.is_string()) bad("\"expression\" must be a string");
  mf.expression = expr.get<std::string>();
  mf.ast = parse(mf.expression, mf.inputs);
  if (max_variable(mf.ast) > mf.d) bad("expression references inputs beyond the dimension");
  return mf;
}

std::vector<Constraint> constraints_from_json(const json& j, int d) {
  if (!j.is_array()) bad("constraints must be an array");
  std::vector<Constraint> out;
  for (const auto& c : j) {
    const json& k = field(c, "kind");
    if (!k.is_string()) bad("constraint \"kind\" must be a string");
    const std::string kind = k.get<std::string>();
    if (kind == "threshold") {
      out.push_back(Constraint::threshold(coalition_field(c, "subset", d),
                                          field(c, "tau").get<double>()));
    } else if (kind == "ratio") {
      out.push_back(Constraint::ratio(coalition_field(c, "a", d),
                                      coalition_field(c, "b", d),
                                      field(c, "epsilon").get<double>()));
    } else if (kind == "difference") {
      out.push_back(Constraint::difference(coalition_field(c, "a", d),
                                           coalition_field(c, "b", d),
                                           field(c, "delta").get<double>()));
    } else {
      bad("unknown constraint kind \"" + kind + "\"");
    }
  }
  return out;
}

json constraint_to_json(const Constraint& c) {
  switch (c.kind) {
    case Constraint::Kind::threshold:
      return json{{"kind", "threshold"}, {"subset", members_json(c.subset)}, {"tau", c.tau}};
    case Constraint::Kind::ratio:
      return json{{"kind", "ratio"},
                  {"a", members_json(c.a)},
                  {"b", members_json(c.b)},
                  {"epsilon", c.epsilon}};
    case Constraint::Kind::difference:
      return json{{"kind", "difference"},
                  {"a", members_json(c.a)},
                  {"b", members_json(c.b)},
                  {"delta", c.delta}};
  }
  throw std::logic_error("unhandled constraint kind");
}

json attribution_to_json(const Attribution& a) {
  json out{{"subset", members_json(a.subset)},
           {"value", a.value},
           {"error_bound", a.error_bound},
           {"exact", a.exact}};
  if (a.exact_value) out["exact_value"] = a.exact_value->to_string();
  return out;
}

json verdict_to_json(const Verdict& v) {
  json inputs = json::array();
  for (const auto& a : v.inputs) inputs.push_back(attribution_to_json(a));
  return json{{"status", to_string(v.status)},
              {"margin", v.margin},
              {"detail", v.detail},
              {"inputs", inputs}};
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

namespace {

void atomic_write(const std::string& path, const void* data, std::size_t size) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot replace " + path + ": " + ec.message());
  }
}

}  // namespace

void save_text(const std::string& path, const std::string& text) {
  atomic_write(path, text.data(), text.size());
}

void save_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  atomic_write(path, bytes.data(), bytes.size());
}

std::vector<std::uint8_t> load_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

ElementaryTable load_table(const std::string& path) {
  const std::vector<std::uint8_t> bytes = load_bytes(path);
  if (bytes.size() >= 4 && bytes[0] == 'S' && bytes[1] == 'O' && bytes[2] == 'A' &&
      bytes[3] == 'T')
    return table_from_binary(bytes);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("invalid JSON in " + path + ": " + e.what());
  }
  return table_from_json(j);
}

void save_table(const std::string& path, const ElementaryTable& table) {
  const std::string p = path;
  const bool binary = p.size() >= 4 && p.compare(p.size() - 4, 4, ".bin") == 0;
  if (binary)
    save_bytes(path, table_to_binary(table));
  else
    save_text(path, dump_json(table_to_json(table)));
}

}  // namespace soa
