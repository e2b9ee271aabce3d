#pragma once
// model -> perturb -> certify -> entropy -> atlas, with a JSON report and an exit status.
#include <chrono>
#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

#include "folia/atlas.hpp"
#include "folia/config.hpp"
#include "folia/entropy.hpp"
#include "folia/perturb.hpp"

namespace folia {

using Json = nlohmann::ordered_json;

inline constexpr const char* kArtifactVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitInput = 1, kExitBudget = 2, kExitCertification = 3 };

inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::Input:
    case ErrorKind::Parameter: return kExitInput;
    case ErrorKind::Budget:
    case ErrorKind::BudgetExceeded: return kExitBudget;
    default: return kExitCertification;
  }
}

// ---- serialization ----------------------------------------------------------------------------

inline Json word_json(const PseudogroupSystem& S, const Word& w) {
  Json a = Json::array();
  for (const auto& l : w.letters)
    a.push_back({{"gen", l.gen}, {"label", l.gen < S.gens.size() ? S.gens[l.gen].label() : "?"}, {"power", l.power}});
  return a;
}

inline Word word_from_json(const Json& j) {
  Word w;
  for (const auto& l : j) w.letters.push_back({l.at("gen").get<size_t>(), l.at("power").get<int>()});
  return w;
}

inline Json certificate_json(const PseudogroupSystem& S, const ResilienceCertificate& c) {
  return {{"h", word_json(S, c.h)},         {"h_text", S.describe(c.h)}, {"x", c.x},
          {"derivative", c.derivative},     {"y", c.y},                  {"connecting", word_json(S, c.connecting)},
          {"distances", c.distances}};
}

inline ResilienceCertificate certificate_from_json(const Json& j) {
  ResilienceCertificate c;
  c.h = word_from_json(j.at("h"));
  c.x = j.at("x").get<double>();
  c.derivative = j.at("derivative").get<double>();
  c.y = j.at("y").get<double>();
  c.connecting = word_from_json(j.at("connecting"));
  c.distances = j.at("distances").get<std::vector<double>>();
  return c;
}

inline Json curve_json(const EntropyCurve& c) {
  Json rows = Json::array(), slopes = Json::array();
  for (const auto& r : c.rows) rows.push_back({{"n", r.n}, {"epsilon", r.eps}, {"count", r.count}, {"rate", r.rate}});
  for (auto [e, s] : c.slopes) slopes.push_back({{"epsilon", e}, {"slope", s}});
  return {{"metric", c.metric}, {"rows", rows}, {"slopes", slopes}};
}

inline std::string curve_csv(const EntropyCurve& c) {
  std::ostringstream o;
  o.precision(17);
  o << "n,epsilon,count,slope\n";
  for (const auto& r : c.rows) o << r.n << "," << r.eps << "," << r.count << "," << c.slope(r.eps) << "\n";
  return o.str();
}

inline Json error_json(const std::string& stage, const Error& e) {
  Json j{{"stage", stage}, {"kind", to_string(e.kind())}, {"message", e.what()}};
  if (auto* cf = dynamic_cast<const CertificationFailure*>(&e)) j["check"] = cf->check, j["residual"] = cf->residual;
  if (auto* bv = dynamic_cast<const BudgetViolation*>(&e)) j["achieved"] = bv->achieved, j["budget"] = bv->budget;
  return j;
}

inline ResilienceSearch search_params(const ExperimentConfig& c) {
  ResilienceSearch s;
  s.depth = c.search_depth, s.return_depth = c.return_depth;
  s.max_iter = c.max_iter, s.converge_tol = c.converge_tol;
  return s;
}

// ---- run --------------------------------------------------------------------------------------

struct RunResult {
  int exit_code = kExitOk;
  Json report;
  std::vector<std::pair<std::string, std::string>> csv;  // (suffix, contents)
};

namespace detail {
class Stopwatch {
 public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};
}  // namespace detail

inline RunResult run_pipeline(const ExperimentConfig& cfg, double jitter = 0.0) {
  RunResult R;
  Json& rep = R.report;
  Json timings = Json::object();
  rep["artifact"] = {{"name", "folia"}, {"version", kArtifactVersion}};
  Json echo = Json::object();
  for (const auto& [k, v] : config_echo(cfg)) echo[k] = v;
  rep["config"] = echo;
  rep["convention_label"] = convention_label(cfg.convention);
  if (jitter != 0.0) rep["grid_jitter"] = jitter;
  std::string stage = "model";
  auto finish = [&](int code, const Json& err) {
    R.exit_code = code;
    rep["status"] = {{"exit_code", code}, {"error", err}};
    rep["timings_ms"] = timings;
    return R;
  };
  auto timed = [&](const std::string& name, const std::function<void()>& f) {
    stage = name;
    detail::Stopwatch sw;
    f();
    timings[name] = sw.ms();
  };
  try {
    RecurrentScenario sc;
    timed("model", [&] { sc = cfg.scenario(); });
    rep["model"] = {{"name", sc.name}, {"description", sc.description}, {"a", sc.a},
                    {"recurrence", sc.recurrence_kind}, {"generators", sc.system.gens.size()}};

    PerturbOutcome out;
    timed("perturb", [&] { out = perturb_with_retry(sc, cfg.perturb_params()); });
    Json attempts = Json::array();
    for (const auto& a : out.attempts)
      attempts.push_back({{"target", a.target}, {"b1", a.b1}, {"offset", a.offset}, {"achieved", a.achieved}, {"ok", a.ok}});
    Json budget{{"r", cfg.r}, {"delta", cfg.delta}, {"samples", cfg.samples}, {"attempts", attempts}};
    if (!out.ok()) {
      double last = out.attempts.empty() ? INFINITY : out.attempts.back().achieved;
      budget["achieved"] = last;
      budget["ok"] = false;
      rep["budget"] = budget;
      rep["certificate"] = nullptr;
      if (out.attempts.empty())
        return finish(kExitCertification, {{"stage", "perturb"}, {"kind", "precondition error"},
                                           {"message", "no orbit return below the first target"}});
      std::ostringstream m;
      m << "C^" << cfg.r << " distance " << last << " >= delta " << cfg.delta << " after " << out.attempts.size()
        << " attempts";
      return finish(kExitBudget, {{"stage", "perturb"}, {"kind", "budget violation"}, {"message", m.str()},
                                  {"achieved", last}, {"budget", cfg.delta}});
    }
    const auto& ps = *out.system;
    const auto& plan = *out.plan;
    double recheck = 0.0;
    timed("budget_recheck", [&] { recheck = slide_distance(ps.slide, cfg.r, 4 * cfg.samples); });
    budget["achieved"] = ps.achieved;
    budget["recheck_samples"] = 4 * cfg.samples;
    budget["recheck_achieved"] = recheck;
    budget["ok"] = ps.achieved < cfg.delta && recheck < cfg.delta;
    rep["budget"] = budget;
    rep["plan"] = {{"a", plan.a},
                   {"b1", plan.b[0]},
                   {"witness", word_json(sc.system, plan.witness)},
                   {"N", plan.N()},
                   {"convention", to_string(plan.convention)},
                   {"spacing", to_string(plan.spacing)},
                   {"ratio", plan.ratio},
                   {"b", plan.b},
                   {"aseq", plan.aseq},
                   {"slide_kind", ps.slide.kind}};
    rep["chain_residuals"] = chain_residuals(ps, plan);
    if (!(recheck < cfg.delta))
      throw BudgetViolation(recheck, cfg.delta, "re-check at 4x samples disagrees with the budget verdict");

    ResilienceCertificate cert;
    timed("certify", [&] { cert = certify_resilience(ps, plan, cfg.max_iter, cfg.converge_tol); });
    rep["certificate"] = certificate_json(ps.system, cert);

    std::optional<ResilienceCertificate> found, before;
    timed("detect", [&] {
      found = detect_resilience(ps.system, search_params(cfg));
      before = detect_resilience(sc.system, search_params(cfg));
    });
    rep["detected"] = found ? certificate_json(ps.system, *found) : Json(nullptr);
    rep["detected_unperturbed"] = before ? certificate_json(sc.system, *before) : Json(nullptr);
    if (!found) fail(ErrorKind::Certification, "independent resilience search found no certificate");

    if (cfg.entropy) {
      timed("entropy", [&] {
        auto cb = entropy_estimate(sc.system, cfg.n_max, cfg.epsilons, cfg.grid, false, jitter);
        auto ca = entropy_estimate(ps.system, cfg.n_max, cfg.epsilons, cfg.grid, false, jitter);
        Json h = Json::array();
        for (size_t i = 0; i < cfg.epsilons.size(); ++i) {
          double bs = cb.slopes[i].second, as = ca.slopes[i].second;
          h.push_back({{"epsilon", cfg.epsilons[i]},
                       {"before_slope", bs},
                       {"after_slope", as},
                       {"before_certificate", before.has_value()},
                       {"after_certificate", true},
                       {"verdict", hurder_verdict(true, bs, as)}});
        }
        rep["entropy"] = {{"scale", {{"n_max", cfg.n_max}, {"grid", cfg.grid}}},
                          {"before", curve_json(cb)},
                          {"after", curve_json(ca)},
                          {"hurder", h},
                          {"note", HurderReport{}.note}};
        R.csv.push_back({".before.csv", curve_csv(cb)});
        R.csv.push_back({".after.csv", curve_csv(ca)});
      });
    }

    if (cfg.atlas) {
      CoherenceReport cr;
      timed("atlas", [&] {
        auto S = build_scene(cfg.atlas_amplitude, cfg.atlas_blend_end);
        cr = scene_coherence(S, cfg.atlas_samples);
        rep["atlas"] = {{"residual", cr.residual},   {"samples", cr.samples},
                        {"threshold", cr.threshold}, {"flagged", cr.flagged},
                        {"overlap_agreement", overlap_agreement(S.atlas, S.plaques)}};
      });
      if (cr.flagged) fail(ErrorKind::Certification, "atlas transition not triangular on the overlap");
    }
  } catch (const Error& e) {
    if (!rep.contains("certificate")) rep["certificate"] = nullptr;
    return finish(exit_code_for(e.kind()), error_json(stage, e));
  }
  return finish(kExitOk, nullptr);
}

// ---- verify -----------------------------------------------------------------------------------

struct VerifyOutcome {
  int exit_code = kExitOk;
  std::string field;  // failing report field, empty on success
  std::vector<std::string> notes;
};

inline std::string certificate_field(const std::string& check) {
  if (check.rfind("fixed point", 0) == 0) return "certificate.x";
  if (check.rfind("attracting", 0) == 0 || check.rfind("h(x)", 0) == 0) return "certificate.h";
  if (check.rfind("orbit-mate", 0) == 0) return "certificate.y";
  if (check.rfind("connecting", 0) == 0) return "certificate.connecting";
  return "certificate.distances";
}

inline VerifyOutcome verify_report(const Json& rep) {
  VerifyOutcome V;
  auto num = [](double x) {
    std::ostringstream o;
    o << x;
    return o.str();
  };
  auto bad = [&](const std::string& field, const std::string& why) {
    V.exit_code = kExitCertification;
    V.field = field;
    V.notes.push_back(field + ": " + why);
    return V;
  };
  if (!rep.contains("certificate") || rep["certificate"].is_null()) {
    V.notes.push_back("nothing to verify: report has no certificate");
    return V;
  }
  ExperimentConfig cfg;
  SlidePlan plan;
  ResilienceCertificate cert;
  try {
    FlatConfig F;
    for (const auto& [k, v] : rep.at("config").items()) F[k] = v.get<std::string>();
    cfg = config_from_flat(F);
    cert = certificate_from_json(rep.at("certificate"));
  } catch (const Error& e) {
    V.exit_code = kExitInput;
    V.notes.push_back(std::string("config: ") + e.what());
    return V;
  } catch (const nlohmann::json::exception& e) {
    return bad("certificate", std::string("malformed: ") + e.what());
  }
  try {
    auto sc = cfg.scenario();
    const auto& pj = rep.at("plan");
    Word witness = word_from_json(pj.at("witness"));
    plan = build_sequences(sc, pj.at("b1").get<double>(), cfg.N, cfg.convention,
                           SpacingRule{cfg.spacing, cfg.max_iter, cfg.converge_tol}, witness);
    auto slide = build_slide(plan);
    PerturbedSystem ps;
    try {
      ps = apply_perturbation(sc, slide, cfg.r, cfg.delta, cfg.samples);
    } catch (const BudgetViolation& e) {
      return bad("budget.achieved", e.what());
    }
    double stored = rep.at("budget").at("achieved").get<double>();
    if (std::abs(stored - ps.achieved) > 1e-12 * std::max(1.0, std::abs(ps.achieved)))
      return bad("budget.achieved", "recomputed distance " + num(ps.achieved) + " differs from stored");
    double recheck = slide_distance(ps.slide, cfg.r, 4 * cfg.samples);
    if (!(recheck < cfg.delta)) return bad("budget.recheck_achieved", "4x-sample distance is not below delta");
    V.notes.push_back("budget: C^" + std::to_string(cfg.r) + " distance below delta (re-checked at 4x samples)");
    auto vr = verify_certificate(ps.system, cert, cfg.converge_tol);
    if (!vr.ok) return bad(certificate_field(vr.check), vr.check + " residual " + num(vr.residual));
    V.notes.push_back("certificate: all stored quantities recomputed from the generators");
    auto found = detect_resilience(ps.system, search_params(cfg));
    if (!found) return bad("detected", "independent resilience search found no certificate");
    V.notes.push_back("detect_resilience: reproduced h = " + ps.system.describe(found->h));
  } catch (const nlohmann::json::exception& e) {
    return bad("plan", std::string("malformed: ") + e.what());
  } catch (const Error& e) {
    return bad("plan", e.what());
  }
  return V;
}

}  // namespace folia
