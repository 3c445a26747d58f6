// vclink: command-line front end for the multivariate sib-pair linkage LRT.

#include "vclink/cone.hpp"
#include "vclink/errors.hpp"
#include "vclink/fisher.hpp"
#include "vclink/io.hpp"
#include "vclink/mle.hpp"
#include "vclink/nulldist.hpp"
#include "vclink/parallel.hpp"
#include "vclink/sim.hpp"
#include "vclink/statutil.hpp"
#include "vclink/version.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace vclink;
using io::fmt4;
using io::fmt_full;
using io::Json;

namespace {

// Settings shared by every subcommand. The JSON config (--config) is read first; explicit
// flags override it.
struct RunConfig {
  std::uint64_t seed = 1;
  int threads = 0;
  std::string configPath;
  std::string outDir = ".";
  OptimizerSettings optimizer;
  ConeSettings cone;
  std::size_t N = 10000;
  std::vector<double> alphas{0.01, 0.05};
  Json study;  // raw "study" section, resolved by cmd_study
};

void load_config(RunConfig& rc, bool seedGiven, bool nGiven) {
  if (rc.configPath.empty()) return;
  const Json j = io::read_json_file(rc.configPath);
  if (!j.is_object()) throw StructuralError(rc.configPath + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "optimizer") {
      io::apply_optimizer(value, rc.optimizer);
    } else if (key == "cone") {
      io::apply_cone(value, rc.cone);
    } else if (key == "study") {
      rc.study = value;
    } else if (key == "N") {
      if (!nGiven) rc.N = value.get<std::size_t>();
    } else if (key == "alphas") {
      rc.alphas = value.get<std::vector<double>>();
    } else if (key == "seed") {
      if (!seedGiven) rc.seed = value.get<std::uint64_t>();
    } else {
      throw StructuralError(rc.configPath + ": unknown key '" + key + "'");
    }
  }
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StructuralError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return io::config_hash(Json(ss.str()));
}

// Effective configuration of a run: everything that determines its numeric output.
Json effective(const RunConfig& rc, const std::string& command, Json extra) {
  Json j = std::move(extra);
  j["command"] = command;
  j["optimizer"] = io::to_json(rc.optimizer);
  j["cone"] = {{"nStarts", rc.cone.nStarts}, {"epsObj", rc.cone.epsObj}, {"tolPolar", rc.cone.tolPolar},
               {"maxIter", rc.cone.maxIter}};
  j["seed"] = rc.seed;
  return j;
}

io::Provenance provenance(const RunConfig& rc, const std::string& command, const Json& eff) {
  return {rc.seed, io::config_hash(eff), command};
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw StructuralError("cannot write '" + p.string() + "'");
  return out;
}

std::string vec_str(const Eigen::VectorXd& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt4(v(i));
  return s + ")";
}

void print_matrix(std::ostream& os, const std::string& name, const Eigen::MatrixXd& m) {
  os << name << ":\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    os << "  ";
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? "  " : "") << fmt4(m(r, c));
    os << '\n';
  }
}

Eigen::VectorXd upper_entries(const Eigen::MatrixXd& m) {
  Eigen::VectorXd v(m.rows() * (m.rows() - 1) / 2);
  Eigen::Index t = 0;
  for (Eigen::Index p = 0; p < m.rows(); ++p)
    for (Eigen::Index q = p + 1; q < m.cols(); ++q) v(t++) = m(p, q);
  return v;
}

Restriction parse_restriction(const std::string& s, int k) {
  if (s == "full") return Restriction::full();
  if (s == "null") return Restriction::null();
  if (s.rfind("partial:", 0) == 0) {
    const int i = std::stoi(s.substr(8));
    if (i < 1 || i > k) throw StructuralError("restriction: trait index must be in 1.." + std::to_string(k));
    return Restriction::partial(i - 1);
  }
  throw StructuralError("restriction must be full, null or partial:<trait>");
}

OptimizerSettings optimizer_for(const RunConfig& rc) {
  OptimizerSettings s = rc.optimizer;
  s.seed = derive_seed(rc.seed, 0x0F17);
  return s;
}

ConeSettings cone_for(const RunConfig& rc) {
  ConeSettings c = rc.cone;
  c.seed = rc.seed;
  return c;
}

// ---- table1 ---------------------------------------------------------------------------

int cmd_table1(const RunConfig& rc) {
  const Json eff = effective(rc, "table1", {{"alphas", rc.alphas}});
  std::cout << io::provenance_line(provenance(rc, "table1", eff)) << '\n';
  std::cout << "k  weights (nu = 0..k)";
  for (double a : rc.alphas) std::cout << "  crit@" << fmt4(a);
  std::cout << '\n';
  for (int k = 2; k <= 5; ++k) {
    std::cout << k << "  ";
    for (double w : binom_mixture_weights(k)) std::cout << fmt4(w) << ' ';
    for (double a : rc.alphas) std::cout << " " << fmt4(binom_mixture_critical(k, a));
    std::cout << '\n';
  }
  return 0;
}

// ---- fit / lrt ------------------------------------------------------------------------

void print_fit(const FitResult& f, const std::string& label) {
  std::cout << label << ": loglik = " << fmt_full(f.loglik) << (f.converged ? "" : "  (not converged)")
            << ", best start " << f.bestStartIndex << " of " << f.nStarts << '\n';
  std::cout << "  a  = " << vec_str(f.params.a) << '\n';
  std::cout << "  mu = " << vec_str(f.params.mu) << '\n';
  print_matrix(std::cout, "  G", f.params.G());
  print_matrix(std::cout, "  E", f.params.E());
}

int cmd_fit(const RunConfig& rc, const std::string& dataPath, const std::string& restriction) {
  const Dataset data = io::read_dataset_csv(dataPath);
  const Restriction r = parse_restriction(restriction, data.k());
  const Json eff = effective(rc, "fit", {{"data", file_digest(dataPath)}, {"restriction", restriction}});
  std::cout << io::provenance_line(provenance(rc, "fit", eff)) << '\n';
  print_fit(fit(data, r, optimizer_for(rc)), r.label());
  return 0;
}

int cmd_lrt(const RunConfig& rc, const std::string& dataPath) {
  const Dataset data = io::read_dataset_csv(dataPath);
  const Json eff = effective(rc, "lrt", {{"data", file_digest(dataPath)}});
  std::cout << io::provenance_line(provenance(rc, "lrt", eff)) << '\n';
  const auto t = lrt(data, optimizer_for(rc));
  std::cout << "families: " << data.size() << ", traits: " << data.k() << '\n';
  std::cout << "lambda = " << fmt_full(t.lambda) << '\n';
  std::cout << "nu     = " << t.nu << '\n';
  std::cout << "loglik null = " << fmt_full(t.nullFit.loglik) << '\n';
  for (std::size_t i = 0; i < t.partialFits.size() && data.k() > 1; ++i)
    std::cout << "loglik a" << (i + 1) << "=0 = " << fmt_full(t.partialFits[i].loglik) << '\n';
  std::cout << "loglik full = " << fmt_full(t.fullFit.loglik) << '\n';
  std::cout << "a-hat = " << vec_str(t.fullFit.params.a) << '\n';
  return 0;
}

// ---- V estimation ---------------------------------------------------------------------

struct VSource {
  VMatrix V;
  Json descriptor;
  std::optional<Dataset> data;
  std::optional<io::KnownParams> params;
};

VSource resolve_v(const RunConfig& rc, const std::string& dataPath, const std::string& paramsPath) {
  if (dataPath.empty() == paramsPath.empty())
    throw StructuralError("give exactly one of --data and --params");
  VSource s;
  if (!paramsPath.empty()) {
    s.params = io::known_params_from_json(io::read_json_file(paramsPath));
    s.V = known_parameter_v(s.params->G, s.params->E, s.params->piLaw, s.params->phi);
    s.descriptor = {{"params", file_digest(paramsPath)}};
  } else {
    s.data = io::read_dataset_csv(dataPath);
    s.V = estimate_v_from_data(*s.data, optimizer_for(rc));
    s.descriptor = {{"data", file_digest(dataPath)}};
  }
  return s;
}

int cmd_fisher(const RunConfig& rc, const std::string& dataPath, const std::string& paramsPath,
               const std::string& outPath) {
  if (dataPath.empty() == paramsPath.empty())
    throw StructuralError("give exactly one of --data and --params-file");
  InfoMatrix info;
  Json desc;
  if (!paramsPath.empty()) {
    const auto p = io::known_params_from_json(io::read_json_file(paramsPath));
    info = fisher_info(SymMatrix::from_dense(p.G), SymMatrix::from_dense(p.E), p.piLaw, p.phi);
    desc = {{"params", file_digest(paramsPath)}};
  } else {
    const Dataset data = io::read_dataset_csv(dataPath);
    info = empirical_fisher_info(data, fit(data, Restriction::null(), optimizer_for(rc)).params);
    desc = {{"data", file_digest(dataPath)}};
  }
  const VMatrix V = extract_v(info);
  const Json eff = effective(rc, "fisher", desc);
  std::ofstream file;
  if (!outPath.empty()) file = open_out(outPath);
  std::ostream& os = outPath.empty() ? std::cout : file;
  os << io::provenance_line(provenance(rc, "fisher", eff)) << '\n';
  os << "# information (per family)\nparam";
  const int m3 = static_cast<int>(info.entries.rows());
  for (int j = 0; j < m3; ++j) os << ',' << parameter_name(info.k, j);
  os << '\n';
  for (int i = 0; i < m3; ++i) {
    os << parameter_name(info.k, i);
    for (int j = 0; j < m3; ++j) os << ',' << fmt_full(info.entries(i, j));
    os << '\n';
  }
  os << "# V\nparam";
  const int m = theta_dim(info.k);
  for (int j = 0; j < m; ++j) os << ',' << parameter_name(info.k, j);
  os << '\n';
  for (int i = 0; i < m; ++i) {
    os << parameter_name(info.k, i);
    for (int j = 0; j < m; ++j) os << ',' << fmt_full(V.entries(i, j));
    os << '\n';
  }
  return 0;
}

// ---- asymp-null / pvalue --------------------------------------------------------------

void write_draws(const fs::path& path, const NullSample& s, const std::string& prov) {
  auto out = open_out(path);
  out << prov << "\ndraw,lambda,nu\n";
  for (std::size_t j = 0; j < s.size(); ++j)
    out << j << ',' << fmt_full(s.draws[j].lambda) << ',' << s.draws[j].nu << '\n';
}

void report_null(std::ostream& os, const NullSample& s, const std::vector<double>& alphas) {
  os << "draws: " << s.size() << '\n';
  os << "mixing (nu = 0.." << s.k << "):";
  for (double p : mixing_probs(s)) os << ' ' << fmt4(p);
  os << '\n';
  for (double a : alphas) {
    const auto c = critical_value(s, a);
    os << "critical value at alpha " << fmt4(a) << ": " << fmt4(c.value)
       << (c.lowResolution ? "  (low resolution: N * alpha < 10)" : "") << "   [binomial mixture: "
       << fmt4(binom_mixture_critical(s.k, a)) << ", incorrect]\n";
  }
}

void report_pvalue(std::ostream& os, const NullSample& s, double observed) {
  const auto p = pvalue(s, observed);
  const double binom = binom_mixture_tail(s.k, observed);
  os << "observed lambda: " << fmt4(observed) << '\n';
  if (p.belowResolution)
    os << "P value: < " << fmt4(1.0 / static_cast<double>(s.size())) << " (no draw reached the observed value)\n";
  else
    os << "P value: " << fmt4(p.value) << '\n';
  os << "binomial-mixture P value (incorrect): " << fmt4(binom) << '\n';
  if (!p.belowResolution && binom > 0.0 && observed > 0.0) {
    const double ratio = p.value / binom;
    os << "corrected P is " << fmt4(ratio) << " times the binomial-mixture P";
    if (ratio >= 2.0) os << "; the binomial mixture overstates significance";
    os << '\n';
  }
}

int cmd_asymp_null(const RunConfig& rc, const std::string& dataPath, const std::string& paramsPath,
                   std::optional<double> observed, const std::string& dumpPath) {
  if (observed && !(*observed >= 0.0)) throw StructuralError("--observed must be >= 0");
  const VSource src = resolve_v(rc, dataPath, paramsPath);
  Json eff = effective(rc, "asymp-null", src.descriptor);
  eff["N"] = rc.N;
  eff["alphas"] = rc.alphas;
  const auto prov = io::provenance_line(provenance(rc, "asymp-null", eff));
  const NullSample s = generate(src.V, rc.N, rc.seed, cone_for(rc));
  std::cout << prov << '\n';
  report_null(std::cout, s, rc.alphas);
  if (observed) report_pvalue(std::cout, s, *observed);
  if (!dumpPath.empty()) write_draws(dumpPath, s, prov);
  return 0;
}

int cmd_pvalue(const RunConfig& rc, const std::string& dataPath, const std::string& paramsPath,
               std::optional<double> observed) {
  if (!paramsPath.empty() && !observed) throw StructuralError("--params needs --observed");
  if (observed && !(*observed >= 0.0)) throw StructuralError("--observed must be >= 0");
  const VSource src = resolve_v(rc, dataPath, paramsPath);
  double obs = 0.0;
  std::optional<int> obsNu;
  if (observed) {
    obs = *observed;
  } else {
    const auto t = lrt(*src.data, optimizer_for(rc));
    obs = t.lambda;
    obsNu = t.nu;
  }
  Json eff = effective(rc, "pvalue", src.descriptor);
  eff["N"] = rc.N;
  eff["observed"] = observed ? Json(*observed) : Json("from data");
  const NullSample s = generate(src.V, rc.N, rc.seed, cone_for(rc));
  std::cout << io::provenance_line(provenance(rc, "pvalue", eff)) << '\n';
  std::cout << "seed: " << rc.seed << '\n';
  if (obsNu) std::cout << "data lrt: lambda = " << fmt_full(obs) << ", nu = " << *obsNu << '\n';
  report_pvalue(std::cout, s, obs);
  report_null(std::cout, s, rc.alphas);
  return 0;
}

// ---- study ----------------------------------------------------------------------------

Json ks_json(const KsResult& r) { return {{"D", r.D}, {"p", r.p}, {"n", r.n}}; }

void write_histogram(const fs::path& path, const std::vector<double>& sorted, int k, const std::string& prov) {
  auto out = open_out(path);
  out << prov << "\nbin_lo,bin_hi,count,expected_chisq" << k << '\n';
  if (sorted.empty()) return;
  const int bins = 40;
  const double hi = std::max(1.0, std::ceil(sorted.back()));
  const double width = hi / bins;
  std::vector<long long> counts(bins, 0);
  for (double x : sorted) counts[static_cast<std::size_t>(std::min(bins - 1, static_cast<int>(x / width)))]++;
  const double n = static_cast<double>(sorted.size());
  for (int b = 0; b < bins; ++b) {
    const double lo = b * width, up = (b + 1) * width;
    out << fmt_full(lo) << ',' << fmt_full(up) << ',' << counts[static_cast<std::size_t>(b)] << ','
        << fmt_full(n * (chisq_cdf(k, up) - chisq_cdf(k, lo))) << '\n';
  }
}

int cmd_study(RunConfig& rc, std::optional<int> k, std::optional<int> reps, std::optional<int> fams,
              bool fullScale, bool serial) {
  Json sj = rc.study.is_null() ? Json::object() : rc.study;
  if (k) sj["k"] = *k;
  if (reps) sj["nReplicates"] = *reps;
  if (fams) sj["nFamilies"] = *fams;
  if (fullScale) sj["nFamilies"] = 2000;
  StudyConfig cfg = io::study_config_from_json(sj);
  cfg.seed = rc.seed;
  if (!sj.contains("optimizer")) cfg.optimizer = rc.optimizer;
  cfg.validate();

  const Json eff = {{"command", "study"}, {"study", io::to_json(cfg)}};
  const auto prov = provenance(rc, "study", eff);
  const auto line = io::provenance_line(prov);
  const StudyResult r = serial ? run_null_study_serial(cfg) : run_null_study(cfg);

  const fs::path dir = rc.outDir;
  {
    auto out = open_out(dir / "replicates.csv");
    out << line << "\nreplicate,lambda,nu,failed\n";
    for (const auto& rec : r.replicates)
      out << rec.replicate << ',' << (rec.failed ? "nan" : fmt_full(rec.lambda)) << ','
          << (rec.failed ? -1 : rec.nu) << ',' << (rec.failed ? 1 : 0) << '\n';
  }
  const std::string histName = "histogram_nu" + std::to_string(cfg.k) + ".csv";
  write_histogram(dir / histName, r.component(cfg.k), cfg.k, line);
  Json summary = {{"provenance", io::provenance_json(prov)},
                  {"config", io::to_json(cfg)},
                  {"replicates", cfg.nReplicates},
                  {"failed", r.nFailed},
                  {"mixing", r.mixing},
                  {"critical", {{"0.01", r.critical01}, {"0.05", r.critical05}}},
                  {"binomialCritical",
                   {{"0.01", binom_mixture_critical(cfg.k, 0.01)}, {"0.05", binom_mixture_critical(cfg.k, 0.05)}}},
                  {"ksTopComponent", r.ksAvailable ? ks_json(r.ksTopComponent) : Json(nullptr)},
                  {"timings", {{"seconds", r.seconds}, {"threads", max_threads()}}}};
  Json failures = Json::array();
  for (const auto& rec : r.replicates)
    if (rec.failed) failures.push_back({{"replicate", rec.replicate}, {"error", rec.error}});
  summary["failures"] = failures;
  open_out(dir / "summary.json") << summary.dump(2) << '\n';

  std::cout << line << '\n';
  std::cout << "k = " << cfg.k << ", " << cfg.nReplicates << " replicates x " << cfg.nFamilies
            << " families, " << r.nFailed << " failed, " << fmt4(r.seconds) << " s\n";
  std::cout << "mixing (nu = 0.." << cfg.k << "):";
  for (double p : r.mixing) std::cout << ' ' << fmt4(p);
  std::cout << "\ncritical 0.05: " << fmt4(r.critical05) << ", 0.01: " << fmt4(r.critical01) << '\n';
  if (r.ksAvailable)
    std::cout << "KS nu=" << cfg.k << " vs chi-square(" << cfg.k << "): D = " << fmt4(r.ksTopComponent.D)
              << ", p = " << fmt4(r.ksTopComponent.p) << " (n = " << r.ksTopComponent.n << ")\n";
  std::cout << "wrote " << (dir / "replicates.csv").string() << ", " << (dir / "summary.json").string() << ", "
            << (dir / histName).string() << '\n';
  return 0;
}

// ---- sweep ----------------------------------------------------------------------------

int cmd_sweep(const RunConfig& rc, int k, double effect, int nDraws, int K) {
  Json eff = effective(rc, "sweep", {{"k", k}, {"effect", effect}, {"draws", nDraws}, {"clusters", K}});
  eff["N"] = rc.N;
  const auto prov = provenance(rc, "sweep", eff);
  RngStream rng(rc.seed, 0x5EE9);
  const auto sets = nuisance_sweep(k, effect, nDraws, K, rng);
  std::vector<NullSample> samples;
  for (std::size_t c = 0; c < sets.size(); ++c)
    samples.push_back(generate(known_parameter_v(sets[c].G, sets[c].E), rc.N, derive_seed(rc.seed, c), cone_for(rc)));

  std::cout << io::provenance_line(prov) << '\n';
  Json out = {{"provenance", io::provenance_json(prov)}, {"sets", Json::array()}, {"pairwiseKs", Json::array()}};
  for (std::size_t c = 0; c < sets.size(); ++c) {
    const auto mix = mixing_probs(samples[c]);
    const double c05 = critical_value(samples[c], 0.05).value;
    std::cout << "set " << (c + 1) << ": corr(G) = " << vec_str(upper_entries(correlation(sets[c].G)))
              << ", corr(E) = " << vec_str(upper_entries(correlation(sets[c].E))) << ", P(nu=0) = "
              << fmt4(mix[0]) << ", crit 0.05 = " << fmt4(c05) << '\n';
    out["sets"].push_back({{"G", io::matrix_to_json(sets[c].G)},
                           {"E", io::matrix_to_json(sets[c].E)},
                           {"mixing", mix},
                           {"critical05", c05}});
  }
  double minP = 1.0;
  for (std::size_t a = 0; a < samples.size(); ++a)
    for (std::size_t b = a + 1; b < samples.size(); ++b) {
      auto la = samples[a].lambdas(), lb = samples[b].lambdas();
      std::sort(la.begin(), la.end());
      std::sort(lb.begin(), lb.end());
      const auto ks = ks_two_sample(la, lb);
      minP = std::min(minP, ks.p);
      out["pairwiseKs"].push_back({{"a", a + 1}, {"b", b + 1}, {"D", ks.D}, {"p", ks.p}});
    }
  std::cout << "smallest pairwise KS p: " << fmt4(minP) << '\n';
  open_out(fs::path(rc.outDir) / "sweep.json") << out.dump(2) << '\n';
  return 0;
}

// ---- baseline -------------------------------------------------------------------------

int cmd_baseline(const RunConfig& rc, const std::string& dataPath, int nPerm, int nBoot) {
  const Dataset data = io::read_dataset_csv(dataPath);
  Json eff = effective(rc, "baseline", {{"data", file_digest(dataPath)}, {"nPerm", nPerm}, {"nBoot", nBoot}});
  eff["N"] = rc.N;
  const auto prov = provenance(rc, "baseline", eff);
  const auto settings = optimizer_for(rc);
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point t0) { return std::chrono::duration<double>(clock::now() - t0).count(); };

  const double observed = lrt(data, settings).lambda;
  auto t0 = clock::now();
  const NullSample s = generate(estimate_v_from_data(data, settings), rc.N, rc.seed, cone_for(rc));
  const double tGen = seconds(t0);
  t0 = clock::now();
  const auto perm = permutation_baseline(data, nPerm, derive_seed(rc.seed, 1), settings);
  const double tPerm = seconds(t0);
  t0 = clock::now();
  const auto boot = bootstrap_baseline(data, nBoot, derive_seed(rc.seed, 2), settings);
  const double tBoot = seconds(t0);

  auto tail = [observed](const std::vector<double>& xs, std::size_t from) {
    std::size_t c = 0;
    for (std::size_t i = from; i < xs.size(); ++i) c += xs[i] >= observed;
    return static_cast<double>(c) / static_cast<double>(xs.size() - from);
  };
  // Replicate 0 of the permutation sample is the observed data itself.
  const double pPerm = nPerm > 1 ? tail(perm, 1) : 1.0;
  const double pBoot = tail(boot, 0);
  const double pGen = pvalue(s, observed).value;

  std::cout << io::provenance_line(prov) << '\n';
  std::cout << "observed lambda: " << fmt4(observed) << '\n';
  std::cout << "method       replicates  P value  seconds\n";
  std::printf("generator    %10zu  %7s  %s\n", s.size(), fmt4(pGen).c_str(), fmt4(tGen).c_str());
  std::printf("permutation  %10d  %7s  %s\n", nPerm, fmt4(pPerm).c_str(), fmt4(tPerm).c_str());
  std::printf("bootstrap    %10d  %7s  %s\n", nBoot, fmt4(pBoot).c_str(), fmt4(tBoot).c_str());
  std::cout << "binomial mixture (incorrect) P: " << fmt4(binom_mixture_tail(data.k(), observed)) << '\n';
  Json out = {{"provenance", io::provenance_json(prov)},
              {"observed", observed},
              {"generator", {{"N", s.size()}, {"p", pGen}, {"seconds", tGen}}},
              {"permutation", {{"n", nPerm}, {"p", pPerm}, {"seconds", tPerm}, {"lambdas", perm}}},
              {"bootstrap", {{"n", nBoot}, {"p", pBoot}, {"seconds", tBoot}, {"lambdas", boot}}}};
  open_out(fs::path(rc.outDir) / "baseline.json") << out.dump(2) << '\n';
  return 0;
}

// ---- cone-demo ------------------------------------------------------------------------

int cmd_cone_demo(const RunConfig& rc, int k, const std::string& paramsPath, const std::string& outPath) {
  VMatrix V;
  Json desc = {{"k", k}};
  if (!paramsPath.empty()) {
    const auto p = io::known_params_from_json(io::read_json_file(paramsPath));
    V = known_parameter_v(p.G, p.E, p.piLaw, p.phi);
    desc["params"] = file_digest(paramsPath);
  } else {
    if (k < 1) throw StructuralError("cone-demo: k must be >= 1");
    V = {k, Eigen::MatrixXd::Identity(theta_dim(k), theta_dim(k))};
  }
  Json eff = effective(rc, "cone-demo", desc);
  eff["N"] = rc.N;
  const auto line = io::provenance_line(provenance(rc, "cone-demo", eff));
  const NullSample s = generate(V, rc.N, rc.seed, cone_for(rc));
  const Eigen::MatrixXd L = V.entries.llt().matrixL();
  const Eigen::MatrixXd W = V.entries.inverse();
  std::ofstream file;
  if (!outPath.empty()) file = open_out(outPath);
  std::ostream& os = outPath.empty() ? std::cout : file;
  os << line << '\n';
  const int m = theta_dim(V.k);
  for (int i = 0; i < m; ++i) {
    const auto [p, q] = theta_entry(V.k, i);
    os << "z" << (p + 1) << (q + 1) << ',';
  }
  os << "nu,lambda,polar\n";
  for (std::size_t j = 0; j < s.size(); ++j) {
    const Eigen::VectorXd Z = null_observation(L, rc.seed, j);
    for (int i = 0; i < m; ++i) os << fmt_full(Z(i)) << ',';
    os << s.draws[j].nu << ',' << fmt_full(s.draws[j].lambda) << ','
       << (polar_membership(ConeProblem(Z, W), rc.cone) ? 1 : 0) << '\n';
  }
  return 0;
}

// ---- simulate -------------------------------------------------------------------------

int cmd_simulate(const RunConfig& rc, int k, int nFamilies, const std::string& paramsPath,
                 const std::vector<double>& loadings, const std::string& outPath) {
  StudyConfig base = StudyConfig::standard(k);
  io::KnownParams p{base.G, base.E};
  Json desc = {{"k", k}, {"families", nFamilies}, {"a", loadings}};
  if (!paramsPath.empty()) {
    p = io::known_params_from_json(io::read_json_file(paramsPath));
    desc["params"] = file_digest(paramsPath);
  }
  const int kk = static_cast<int>(p.G.rows());
  Eigen::VectorXd a = Eigen::VectorXd::Zero(kk);
  if (!loadings.empty()) {
    if (static_cast<int>(loadings.size()) != kk) throw StructuralError("--a needs one loading per trait");
    for (int i = 0; i < kk; ++i) a(i) = loadings[static_cast<std::size_t>(i)];
  }
  const auto truth = ComponentParams::from_covariances(a, p.G, p.E, Eigen::VectorXd::Zero(kk));
  const Json eff = effective(rc, "simulate", desc);
  RngStream rng(rc.seed, 0x51A);
  const Dataset data = simulate_dataset(truth, nFamilies, p.piLaw, rng, p.phi);
  std::ofstream file;
  if (!outPath.empty()) file = open_out(outPath);
  std::ostream& os = outPath.empty() ? std::cout : file;
  os << io::provenance_line(provenance(rc, "simulate", eff)) << '\n';
  io::write_dataset_csv(os, data);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multivariate sib-pair variance-components linkage LRT and its asymptotic null distribution"};
  app.set_version_flag("--version", std::string("vclink ") + kVersion + " (schema " +
                                        std::to_string(kSchemaVersion) + ")");
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig rc;
  auto* seedOpt = app.add_option("--seed", rc.seed, "Master seed for all randomness");
  app.add_option("--threads", rc.threads, "Worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--config", rc.configPath, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", rc.outDir, "Output directory for file artifacts");
  CLI::Option* nOpt = nullptr;

  std::string dataPath, paramsPath, dumpPath, outPath, restriction = "full";
  double observedValue = 0.0;
  int kOpt = 2, nPerm = 1000, nBoot = 1000, draws = 2000, clusters = 5;
  double effect = 0.4;
  int studyK = 0, studyReps = 0, studyFams = 0;
  bool fullScale = false, serial = false;

  auto* table1 = app.add_subcommand("table1", "Binomial chi-square mixture weights and critical values, k = 2..5");

  auto* fitCmd = app.add_subcommand("fit", "Maximum-likelihood fit of one model");
  fitCmd->add_option("--data", dataPath, "Dataset CSV")->required()->check(CLI::ExistingFile);
  fitCmd->add_option("--restriction", restriction, "full | null | partial:<trait>");

  auto* lrtCmd = app.add_subcommand("lrt", "Likelihood-ratio statistic and nu for a dataset");
  lrtCmd->add_option("--data", dataPath, "Dataset CSV")->required()->check(CLI::ExistingFile);

  auto* fisherCmd = app.add_subcommand("fisher", "Fisher information and V as CSV");
  auto* fd = fisherCmd->add_option("--data", dataPath, "Dataset CSV")->check(CLI::ExistingFile);
  auto* fp = fisherCmd->add_option("--params-file", paramsPath, "Known G, E (JSON)")->check(CLI::ExistingFile);
  fd->excludes(fp);
  fisherCmd->add_option("-o,--output", outPath, "Write CSV here instead of stdout");

  auto* nullCmd = app.add_subcommand("asymp-null", "Generate the asymptotic null distribution");
  auto* nd = nullCmd->add_option("--data", dataPath, "Dataset CSV (estimate V)")->check(CLI::ExistingFile);
  auto* np = nullCmd->add_option("--params", paramsPath, "Known G, E (JSON)")->check(CLI::ExistingFile);
  nd->excludes(np);
  auto* nullN = nullCmd->add_option("--n", rc.N, "Number of draws")->check(CLI::PositiveNumber);
  auto* nullObs = nullCmd->add_option("--observed", observedValue, "Observed lambda");
  nullCmd->add_option("--dump", dumpPath, "Write the (lambda, nu) sample to this CSV");

  auto* pvCmd = app.add_subcommand("pvalue", "Corrected P value for a dataset's LRT");
  auto* pd = pvCmd->add_option("--data", dataPath, "Dataset CSV")->check(CLI::ExistingFile);
  auto* pp = pvCmd->add_option("--params", paramsPath, "Known G, E (JSON); needs --observed")->check(CLI::ExistingFile);
  pd->excludes(pp);
  auto* pvN = pvCmd->add_option("--n", rc.N, "Number of generator draws")->check(CLI::PositiveNumber);
  auto* pvObs = pvCmd->add_option("--observed", observedValue, "Observed lambda (default: computed from --data)");

  auto* studyCmd = app.add_subcommand("study", "Replicate null-model LRT study");
  auto* sk = studyCmd->add_option("--k", studyK, "Traits")->check(CLI::PositiveNumber);
  auto* sr = studyCmd->add_option("--replicates", studyReps, "Replicates")->check(CLI::PositiveNumber);
  auto* sf = studyCmd->add_option("--families", studyFams, "Families per replicate")->check(CLI::PositiveNumber);
  studyCmd->add_flag("--full-scale", fullScale, "2000 families per replicate");
  studyCmd->add_flag("--serial", serial, "Use the serial reference loop");

  auto* sweepCmd = app.add_subcommand("sweep", "Nuisance-parameter sensitivity of the null distribution");
  sweepCmd->add_option("--k", kOpt, "Traits")->check(CLI::Range(2, 10));
  sweepCmd->add_option("--effect", effect, "Polygenic effect size")->check(CLI::Range(0.0, 1.0));
  sweepCmd->add_option("--draws", draws, "Inverse-Wishart draws")->check(CLI::PositiveNumber);
  sweepCmd->add_option("--clusters", clusters, "K-means clusters")->check(CLI::PositiveNumber);
  auto* swN = sweepCmd->add_option("--n", rc.N, "Generator draws per set")->check(CLI::PositiveNumber);

  auto* baseCmd = app.add_subcommand("baseline", "Permutation and bootstrap P values against the generator");
  baseCmd->add_option("--data", dataPath, "Dataset CSV")->required()->check(CLI::ExistingFile);
  baseCmd->add_option("--nperm", nPerm, "Permutations (replicate 0 is the identity)")->check(CLI::PositiveNumber);
  baseCmd->add_option("--nboot", nBoot, "Bootstrap replicates")->check(CLI::PositiveNumber);
  auto* bN = baseCmd->add_option("--n", rc.N, "Generator draws")->check(CLI::PositiveNumber);

  auto* demoCmd = app.add_subcommand("cone-demo", "CSV point cloud of (Z, nu, lambda)");
  demoCmd->add_option("--k", kOpt, "Traits (identity V)")->check(CLI::PositiveNumber);
  demoCmd->add_option("--params", paramsPath, "Known G, E (JSON) for V")->check(CLI::ExistingFile);
  auto* dN = demoCmd->add_option("--n", rc.N, "Points")->check(CLI::PositiveNumber);
  demoCmd->add_option("-o,--output", outPath, "Write CSV here instead of stdout");

  auto* simCmd = app.add_subcommand("simulate", "Write a simulated dataset CSV");
  std::vector<double> loadings;
  int simFamilies = 500;
  simCmd->add_option("--k", kOpt, "Traits (standard nuisance values)")->check(CLI::PositiveNumber);
  simCmd->add_option("--families", simFamilies, "Families")->check(CLI::PositiveNumber);
  simCmd->add_option("--params", paramsPath, "Known G, E (JSON)")->check(CLI::ExistingFile);
  simCmd->add_option("--a", loadings, "Major-gene loadings (default: null model)");
  simCmd->add_option("-o,--output", outPath, "Write CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    for (auto* o : {nullN, pvN, swN, bN, dN})
      if (o->count()) nOpt = o;
    const std::size_t nFlag = rc.N;
    load_config(rc, seedOpt->count() > 0, nOpt != nullptr);
    if (nOpt) rc.N = nFlag;
    if (rc.threads > 0) set_threads(rc.threads);

    if (table1->parsed()) return cmd_table1(rc);
    if (fitCmd->parsed()) return cmd_fit(rc, dataPath, restriction);
    if (lrtCmd->parsed()) return cmd_lrt(rc, dataPath);
    if (fisherCmd->parsed()) return cmd_fisher(rc, dataPath, paramsPath, outPath);
    if (nullCmd->parsed())
      return cmd_asymp_null(rc, dataPath, paramsPath,
                            nullObs->count() ? std::optional<double>(observedValue) : std::nullopt, dumpPath);
    if (pvCmd->parsed())
      return cmd_pvalue(rc, dataPath, paramsPath,
                        pvObs->count() ? std::optional<double>(observedValue) : std::nullopt);
    if (studyCmd->parsed())
      return cmd_study(rc, sk->count() ? std::optional<int>(studyK) : std::nullopt,
                       sr->count() ? std::optional<int>(studyReps) : std::nullopt,
                       sf->count() ? std::optional<int>(studyFams) : std::nullopt, fullScale, serial);
    if (sweepCmd->parsed()) return cmd_sweep(rc, kOpt, effect, draws, clusters);
    if (baseCmd->parsed()) return cmd_baseline(rc, dataPath, nPerm, nBoot);
    if (demoCmd->parsed()) return cmd_cone_demo(rc, kOpt, paramsPath, outPath);
    if (simCmd->parsed()) return cmd_simulate(rc, kOpt, simFamilies, paramsPath, loadings, outPath);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
