#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "soa/distribution.hpp"
#include "soa/fairness.hpp"
#include "soa/game.hpp"
#include "soa/model.hpp"
#include "soa/pce.hpp"
#include "soa/spectral.hpp"

namespace soa {

// JSON round-trips for the persistent artifacts.  Writers emit
// deterministic text (keys sorted, shortest round-trip floats) and the file
// helpers write atomically (temp file + rename).  Exact values serialize as
// a JSON integer when integral, otherwise as a "p/q" string; readers accept
// numbers (decimals convert exactly) or "p/q" in every exact-value slot.

nlohmann::json rational_to_json(const Rational& r);
Rational rational_from_json(const nlohmann::json& j);

// { "d": int, "values": { "<sorted indices>": value } }; the empty-set key
// "" maps to 0.
nlohmann::json game_to_json(const Game<Rational>& game);
Game<Rational> game_from_json(const nlohmann::json& j);

// { "marginals": [ {"type": ...} ] } or { "mvnormal": {"mean","cov"} },
// plus "ordering" when one was set explicitly.
nlohmann::json distribution_to_json(const DistributionSpec& dist);
DistributionSpec distribution_from_json(const nlohmann::json& j);

// { "d", "distribution", "coefficients": [ {"alpha": [ints], "y": float} ],
//   "sigma2_estimate", "converged", "epsilon" }.  The construction log and
// the Monte Carlo stderr are working state, not persisted.
nlohmann::json pce_to_json(const Pce& pce);
Pce pce_from_json(const nlohmann::json& j);

// { "format_version", "d", "max_order",
//   "entries": [ {"s": [ints], "u": [ints], "value": "p/q"} ] } with
// entries sorted by (s, u) masks.
nlohmann::json table_to_json(const ElementaryTable& table);
ElementaryTable table_from_json(const nlohmann::json& j);

// Binary companion: "SOAT", u32 version, u32 d, u32 max_order, u64 count,
// then per entry u32 s, u32 u, i64 num, i64 den, all little-endian, same
// entry order as the JSON form.
std::vector<std::uint8_t> table_to_binary(const ElementaryTable& table);
ElementaryTable table_from_binary(const std::vector<std::uint8_t>& bytes);

// Model file: { "d", "inputs": [names], "distribution": DistributionSpec or
// { "joint_pmf": [ {"x": [...], "p": ...} ] }, "expression": string }.
// Exactly one of distribution/joint_pmf is set after loading.
struct ModelFile {
  int d = 0;
  std::vector<std::string> inputs;
  std::optional<DistributionSpec> distribution;
  std::optional<JointPmf> joint_pmf;
  std::string expression;
  ModelAst ast;
};

ModelFile model_from_json(const nlohmann::json& j);

// [ {"kind": "threshold", "subset": [1], "tau": ...},
//   {"kind": "ratio", "a": [...], "b": [...], "epsilon": ...},
//   {"kind": "difference", "a": [...], "b": [...], "delta": ...} ]
std::vector<Constraint> constraints_from_json(const nlohmann::json& j, int d);
nlohmann::json constraint_to_json(const Constraint& c);

nlohmann::json attribution_to_json(const Attribution& a);
nlohmann::json verdict_to_json(const Verdict& v);

// Canonical text form: dump with 2-space indent and a trailing newline.
std::string dump_json(const nlohmann::json& j);

nlohmann::json load_json(const std::string& path);
void save_text(const std::string& path, const std::string& text);
void save_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> load_bytes(const std::string& path);

// Table loader that dispatches on the binary magic, accepting either form.
ElementaryTable load_table(const std::string& path);
void save_table(const std::string& path, const ElementaryTable& table);

}  // namespace soa
