#include "vclink/io.hpp"

#include "vclink/errors.hpp"
#include "vclink/version.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace vclink::io {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string{} : f.substr(b, e - b + 1);
  }
  return out;
}

[[noreturn]] void fail_at(const std::string& source, int line, const std::string& what) {
  throw StructuralError(source + ": line " + std::to_string(line) + ": " + what);
}

double parse_number(const std::string& s, const std::string& source, int line, const std::string& column) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc{} || ptr != end)
    fail_at(source, line, "column '" + column + "': '" + s + "' is not a number");
  if (!std::isfinite(v)) fail_at(source, line, "column '" + column + "' is not finite");
  return v;
}

bool skippable(const std::string& line) {
  const auto b = line.find_first_not_of(" \t\r");
  return b == std::string::npos || line[b] == '#';
}

}  // namespace

Dataset parse_dataset_csv(std::istream& in, const std::string& source) {
  std::string line;
  int lineNo = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineNo;
    if (skippable(line)) continue;
    header = split_fields(line);
    break;
  }
  if (header.empty()) throw StructuralError(source + ": no header line");
  const int headerLine = lineNo;

  std::map<std::string, int> col;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    if (!col.emplace(header[static_cast<std::size_t>(i)], i).second)
      fail_at(source, headerLine, "duplicate column '" + header[static_cast<std::size_t>(i)] + "'");
  }
  if (!col.count("family")) fail_at(source, headerLine, "missing column 'family'");
  if (!col.count("pi")) fail_at(source, headerLine, "missing column 'pi'");
  const bool hasPhi = col.count("phi") > 0;
  int k = 0;
  while (col.count("y_1_" + std::to_string(k + 1))) ++k;
  if (k == 0) fail_at(source, headerLine, "missing column 'y_1_1'");
  std::vector<int> ycols;
  for (int s = 1; s <= 2; ++s)
    for (int t = 1; t <= k; ++t) {
      const std::string name = "y_" + std::to_string(s) + "_" + std::to_string(t);
      if (!col.count(name)) fail_at(source, headerLine, "missing column '" + name + "'");
      ycols.push_back(col[name]);
    }
  const std::size_t expected = static_cast<std::size_t>(2 * k + 2 + (hasPhi ? 1 : 0));
  if (header.size() != expected)
    fail_at(source, headerLine, "unexpected columns (expected " + std::to_string(expected) + ")");

  std::vector<FamilyObservation> fams;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    ++lineNo;
    if (skippable(line)) continue;
    const auto f = split_fields(line);
    if (f.size() != header.size())
      fail_at(source, lineNo, "has " + std::to_string(f.size()) + " fields, header has " +
                                  std::to_string(header.size()));
    const std::string& fam = f[static_cast<std::size_t>(col["family"])];
    if (fam.empty()) fail_at(source, lineNo, "empty family id");
    if (auto [it, fresh] = seen.emplace(fam, lineNo); !fresh)
      fail_at(source, lineNo, "family '" + fam + "' repeats line " + std::to_string(it->second));
    FamilyObservation o;
    o.pi = parse_number(f[static_cast<std::size_t>(col["pi"])], source, lineNo, "pi");
    if (o.pi < 0.0 || o.pi > 1.0) fail_at(source, lineNo, "pi outside [0, 1]");
    if (hasPhi) {
      o.phi = parse_number(f[static_cast<std::size_t>(col["phi"])], source, lineNo, "phi");
      if (o.phi < 0.0 || o.phi > 0.5) fail_at(source, lineNo, "phi outside [0, 0.5]");
    }
    o.y.resize(2 * k);
    for (int d = 0; d < 2 * k; ++d)
      o.y(d) = parse_number(f[static_cast<std::size_t>(ycols[static_cast<std::size_t>(d)])], source,
                            lineNo, header[static_cast<std::size_t>(ycols[static_cast<std::size_t>(d)])]);
    fams.push_back(std::move(o));
  }
  if (fams.empty()) throw StructuralError(source + ": no data rows");
  return Dataset(k, std::move(fams));
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError("cannot open '" + path + "'");
  return parse_dataset_csv(in, path);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  const int k = data.k();
  bool anyPhi = false;
  for (const auto& f : data.families()) anyPhi = anyPhi || f.phi != kSibKinship;
  out << "family,pi";
  if (anyPhi) out << ",phi";
  for (int s = 1; s <= 2; ++s)
    for (int t = 1; t <= k; ++t) out << ",y_" << s << '_' << t;
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& f = data[i];
    out << (i + 1) << ',' << fmt_full(f.pi);
    if (anyPhi) out << ',' << fmt_full(f.phi);
    for (int d = 0; d < 2 * k; ++d) out << ',' << fmt_full(f.y(d));
    out << '\n';
  }
}

std::string fmt_full(double x) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

std::string fmt4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw StructuralError(path + ": " + e.what());
  }
}

namespace {

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& what) {
  if (!j.is_object()) throw StructuralError(what + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw StructuralError(what + ": unknown key '" + key + "'");
  }
}

template <class T>
void read_field(const Json& j, const char* key, T& out, const std::string& what) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw StructuralError(what + ": key '" + key + "' has the wrong type");
  }
}

PiLaw pi_law_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw StructuralError("piLaw: expected a nonempty array");
  PiLaw law;
  for (const auto& atom : j) {
    check_keys(atom, {"pi", "weight"}, "piLaw entry");
    PiAtom a;
    read_field(atom, "pi", a.pi, "piLaw entry");
    read_field(atom, "weight", a.weight, "piLaw entry");
    law.push_back(a);
  }
  validate_pi_law(law);
  return law;
}

}  // namespace

void apply_optimizer(const Json& j, OptimizerSettings& out) {
  check_keys(j, {"nStarts", "tol", "maxIter", "epsLL", "seed"}, "optimizer");
  read_field(j, "nStarts", out.nStarts, "optimizer");
  read_field(j, "tol", out.tol, "optimizer");
  read_field(j, "maxIter", out.maxIter, "optimizer");
  read_field(j, "epsLL", out.epsLL, "optimizer");
  read_field(j, "seed", out.seed, "optimizer");
  out.validate();
}

void apply_cone(const Json& j, ConeSettings& out) {
  check_keys(j, {"nStarts", "epsObj", "tolPolar", "maxIter"}, "cone");
  read_field(j, "nStarts", out.nStarts, "cone");
  read_field(j, "epsObj", out.epsObj, "cone");
  read_field(j, "tolPolar", out.tolPolar, "cone");
  read_field(j, "maxIter", out.maxIter, "cone");
  if (out.nStarts < 0 || out.maxIter < 1 || !(out.epsObj >= 0.0) || !(out.tolPolar >= 0.0))
    throw StructuralError("cone: settings out of range");
}

Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw StructuralError(what + ": expected a nonempty array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
      throw StructuralError(what + ": row " + std::to_string(r + 1) + " does not have " +
                            std::to_string(n) + " entries");
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw StructuralError(what + ": non-numeric entry");
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

StudyConfig study_config_from_json(const Json& j) {
  check_keys(j, {"k", "nFamilies", "nReplicates", "G", "E", "piLaw", "seed", "optimizer"}, "study config");
  int k = 2;
  read_field(j, "k", k, "study config");
  if (k < 1) throw StructuralError("study config: k must be >= 1");
  StudyConfig c = StudyConfig::standard(k);
  read_field(j, "nFamilies", c.nFamilies, "study config");
  read_field(j, "nReplicates", c.nReplicates, "study config");
  read_field(j, "seed", c.seed, "study config");
  if (j.contains("G")) c.G = matrix_from_json(j["G"], "G");
  if (j.contains("E")) c.E = matrix_from_json(j["E"], "E");
  if (j.contains("piLaw")) c.piLaw = pi_law_from_json(j["piLaw"]);
  if (j.contains("optimizer")) apply_optimizer(j["optimizer"], c.optimizer);
  return c;
}

Json to_json(const OptimizerSettings& s) {
  return {{"nStarts", s.nStarts}, {"tol", s.tol}, {"maxIter", s.maxIter}, {"epsLL", s.epsLL}, {"seed", s.seed}};
}

Json to_json(const PiLaw& law) {
  Json out = Json::array();
  for (const auto& a : law) out.push_back({{"pi", a.pi}, {"weight", a.weight}});
  return out;
}

Json to_json(const StudyConfig& c) {
  return {{"k", c.k},
          {"nFamilies", c.nFamilies},
          {"nReplicates", c.nReplicates},
          {"G", matrix_to_json(c.G)},
          {"E", matrix_to_json(c.E)},
          {"piLaw", to_json(c.piLaw)},
          {"seed", c.seed},
          {"optimizer", to_json(c.optimizer)}};
}

KnownParams known_params_from_json(const Json& j) {
  check_keys(j, {"G", "E", "piLaw", "phi"}, "params file");
  if (!j.contains("G") || !j.contains("E")) throw StructuralError("params file: G and E are required");
  KnownParams p;
  p.G = matrix_from_json(j["G"], "G");
  p.E = matrix_from_json(j["E"], "E");
  if (p.G.rows() != p.E.rows()) throw StructuralError("params file: G and E differ in size");
  if (j.contains("piLaw")) p.piLaw = pi_law_from_json(j["piLaw"]);
  read_field(j, "phi", p.phi, "params file");
  if (p.phi < 0.0 || p.phi > 0.5) throw StructuralError("params file: phi outside [0, 0.5]");
  return p;
}

std::string config_hash(const Json& effectiveConfig) {
  const std::string text = effectiveConfig.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string provenance_line(const Provenance& p) {
  std::ostringstream os;
  os << "# vclink " << kVersion << " schema=" << kSchemaVersion << " command=" << p.command
     << " seed=" << p.seed << " config_hash=" << p.configHash;
  return os.str();
}

Json provenance_json(const Provenance& p) {
  return {{"version", kVersion}, {"schema", kSchemaVersion}, {"command", p.command},
          {"seed", p.seed}, {"configHash", p.configHash}};
}

}  // namespace vclink::io
