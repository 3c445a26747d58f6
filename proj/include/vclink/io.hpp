#pragma once

// Dataset CSV, JSON configuration files, and the provenance line every output carries.

#include "vclink/cone.hpp"
#include "vclink/fisher.hpp"
#include "vclink/mle.hpp"
#include "vclink/model.hpp"
#include "vclink/sim.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>

namespace vclink::io {

using Json = nlohmann::json;

// Header `family,pi[,phi],y_1_1..y_1_k,y_2_1..y_2_k`; columns may come in any order. Blank lines
// and lines starting with '#' are skipped. Errors are StructuralError naming source and line.
Dataset parse_dataset_csv(std::istream& in, const std::string& source = "<stream>");
Dataset read_dataset_csv(const std::string& path);
void write_dataset_csv(std::ostream& out, const Dataset& data);

// Full double precision (round-trips) and 4 significant digits.
std::string fmt_full(double x);
std::string fmt4(double x);

Json read_json_file(const std::string& path);

// Fields are optional; absent ones keep the value already in `out`. Unknown keys are errors.
void apply_optimizer(const Json& j, OptimizerSettings& out);
void apply_cone(const Json& j, ConeSettings& out);
// Keys: k, nFamilies, nReplicates, G, E, piLaw, seed, optimizer. G and E default to
// StudyConfig::standard(k).
StudyConfig study_config_from_json(const Json& j);
Json to_json(const StudyConfig& c);
Json to_json(const OptimizerSettings& s);
Json to_json(const PiLaw& law);

// Known nuisance parameters: {"G": [[..]], "E": [[..]], "piLaw": [...], "phi": 0.25}.
struct KnownParams {
  Eigen::MatrixXd G, E;
  PiLaw piLaw = sib_pair_pi_law();
  double phi = kSibKinship;
};
KnownParams known_params_from_json(const Json& j);
Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& what);

// FNV-1a 64 of the canonical (sorted-key, compact) serialisation, as 16 hex digits.
std::string config_hash(const Json& effectiveConfig);

struct Provenance {
  std::uint64_t seed = 0;
  std::string configHash;
  std::string command;
};
// "# vclink <version> schema=<n> command=<c> seed=<s> config_hash=<h>"
std::string provenance_line(const Provenance& p);
Json provenance_json(const Provenance& p);

}  // namespace vclink::io
