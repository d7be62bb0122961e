#include "halfspace/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <random>

namespace halfspace {

namespace {

using clock_type = std::chrono::steady_clock;

struct StageClock {
  VerificationReport& rep;
  bool fixed;
  clock_type::time_point t0 = clock_type::now();

  void lap(const std::string& stage) {
    auto t1 = clock_type::now();
    double ms =
        fixed ? 0.0
              : std::chrono::duration<double, std::milli>(t1 - t0).count();
    rep.timing.push_back({stage, ms});
    t0 = t1;
  }
};

std::string classify(const Error& e) {
  if (dynamic_cast<const ConfigError*>(&e) ||
      dynamic_cast<const SpecError*>(&e) ||
      dynamic_cast<const PreconditionError*>(&e) ||
      dynamic_cast<const IoError*>(&e) ||
      dynamic_cast<const ReportVersionError*>(&e) ||
      dynamic_cast<const OracleIncomplete*>(&e))
    return "config";
  if (dynamic_cast<const ConstructionError*>(&e) ||
      dynamic_cast<const BudgetExhausted*>(&e))
    return "invariant";
  return "numerical";
}

void append(std::vector<CertificateEntry>& dst,
            std::vector<CertificateEntry>&& src) {
  for (CertificateEntry& c : src) dst.push_back(std::move(c));
}

json growth_json(const GrowthCertificate& g) {
  return {{"winner", g.winner},
          {"score", g.score},
          {"growth_factor", g.growth_factor},
          {"weak_growth", g.weak_growth},
          {"monotone_from", g.monotone_from}};
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  ScenarioResult res;
  VerificationReport& rep = res.report;
  const double ts = cfg.tol_scale();
  rep.environment = environment_stamp(cfg.fixed_stamp, ts);
  rep.diagnostics = json::object();
  StageClock clock{rep, cfg.fixed_stamp};
  std::string stage = "config";
  try {
    validate_config(cfg);
    rep.scenario = config_to_json(cfg);
    const IdealSpec ideal = cfg.ideal;
    const double eps = cfg.epsilon;
    clock.lap("config");

    stage = "truncation";
    TruncatedOperator T = build_truncation(cfg.spec, cfg.dim);
    clock.lap("truncation");

    stage = "dispatch";
    CaseTag tag = select_beta(cfg.spec);
    res.artifacts.tag = tag;
    rep.case_variant = case_name(tag.variant);
    rep.diagnostics["case"] = rep.case_variant;
    rep.diagnostics["beta"] = {{"re", tag.beta.real()}, {"im", tag.beta.imag()}};
    clock.lap("dispatch");

    const bool deep = cfg.pipeline.refine3 || cfg.pipeline.derivation;
    const int count = cfg.count > 0 ? cfg.count : auto_count(cfg.dim, deep);
    rep.diagnostics["count"] = count;

    if (cfg.pipeline.decompose2) {
      if (tag.variant == CaseVariant::Case3Deferred) {
        rep.diagnostics["note"] =
            "case dispatch deferred: no constructive branch for this family";
      } else if (tag.variant == CaseVariant::Case3Nilpotent) {
        stage = "blocks";
        res.artifacts.dec = decompose_case3(cfg.spec, T, ideal, eps);
        clock.lap("blocks");
      } else if (tag.variant == CaseVariant::Case2) {
        stage = "blocks";
        res.artifacts.dec = decompose_case2(cfg.spec, T, ideal, eps, count);
        clock.lap("blocks");
      } else {
        stage = "approach";
        std::vector<cplx> lambdas =
            generate_approach(cfg.spec, tag, ideal, count, 0.5, cfg.dim);
        auto [probe, growth] = select_probe(T, lambdas, cfg.probe_seed);
        rep.diagnostics["growth"] = growth_json(growth);
        StructuredOp A = structured_form(T);
        for (int i = 0; i < A.dim(); ++i) A.d[i] -= tag.beta;
        std::vector<cplx> rel = lambdas;
        for (cplx& l : rel) l -= tag.beta;
        res.artifacts.seq = near_eigenvectors(A, tag, rel, probe);
        clock.lap("approach");

        stage = "selection";
        res.artifacts.sys =
            select_almost_orthogonal(*res.artifacts.seq, count + 1, ideal, 1.0);
        orthonormalize(*res.artifacts.sys);
        rep.diagnostics["selection"] = {
            {"span_dim", res.artifacts.sys->span_dim},
            {"max_offdiag", res.artifacts.sys->max_offdiag},
            {"riesz_lower", res.artifacts.sys->riesz_lower},
            {"riesz_upper", res.artifacts.sys->riesz_upper}};
        clock.lap("selection");

        stage = "similarity";
        SimilarityMap sim = build_similarity(*res.artifacts.sys);
        clock.lap("similarity");
        stage = "core";
        CoreMatrix core = assemble_core(A, *res.artifacts.sys, sim);
        clock.lap("core");
        stage = "halfspace";
        HalfChoice choice = choose_halfspace(core, *res.artifacts.sys, ideal, eps);
        clock.lap("halfspace");
        stage = "blocks";
        res.artifacts.dec = decompose_2x2(A, *res.artifacts.sys, sim, choice,
                                          ideal, eps, tag);
        clock.lap("blocks");
      }
    }

    stage = "checker";
    if (res.artifacts.seq)
      append(rep.certificates, check_approach(cfg.spec, cfg.dim, tag,
                                              *res.artifacts.seq, ts));
    if (res.artifacts.sys)
      append(rep.certificates, check_system(*res.artifacts.sys, ts));
    if (res.artifacts.dec) {
      const HalfSpaceDecomposition2x2& dec = *res.artifacts.dec;
      rep.diagnostics["halfspace"] = {
          {"K", dec.K},
          {"dim_M", dec.certs.dim_M},
          {"dim_M_perp", dec.certs.dim_Mperp},
          {"norm_T11", dec.certs.norm_T11},
          {"ideal_T11", dec.certs.ideal_T11},
          {"norm_R", dec.certs.norm_R},
          {"ideal_R", dec.certs.ideal_R}};
      append(rep.certificates, check_decomposition(cfg.spec, cfg.dim, tag, dec,
                                                   ideal, eps, ts));
    }
    clock.lap("checker");

    if (cfg.pipeline.oblique && res.artifacts.dec) {
      stage = "oblique";
      StructuredOp A = structured_form(T);
      for (int i = 0; i < A.dim(); ++i) A.d[i] -= tag.beta;
      res.artifacts.oblique = oblique_form(A, *res.artifacts.dec);
      append(rep.certificates,
             check_oblique(cfg.spec, cfg.dim, tag, *res.artifacts.dec,
                           *res.artifacts.oblique, ts));
      clock.lap("oblique");
    }

    if (cfg.pipeline.refine3 && res.artifacts.dec) {
      stage = "refine3";
      StructuredOp A = structured_form(T);
      for (int i = 0; i < A.dim(); ++i) A.d[i] -= tag.beta;
      res.artifacts.refined = refine_3x3(A, *res.artifacts.dec, ideal, eps);
      const BlockForm3x3& f = *res.artifacts.refined;
      rep.diagnostics["refine3"] = {
          {"q1", int(f.B1.cols())},
          {"q3", int(f.B3.cols())},
          {"q2", cfg.dim - int(f.B1.cols()) - int(f.B3.cols())},
          {"K_inner", f.K_inner},
          {"inner_span", f.inner_span},
          {"adjoint_roundtrip", f.adjoint_roundtrip}};
      append(rep.certificates, check_refine(cfg.spec, cfg.dim, tag, f, ideal,
                                            eps, ts));
      clock.lap("refine3");
    }

    if (cfg.pipeline.derivation && res.artifacts.refined) {
      stage = "derivation";
      const BlockForm3x3& f = *res.artifacts.refined;
      if (!f.B2)
        throw PreconditionError(
            "derivation stage needs the materialized middle block "
            "(dim <= 768)");
      std::mt19937_64 rng(cfg.x_seed);
      std::normal_distribution<double> g;
      for (int t = 0; t < cfg.x_count; ++t) {
        Mat X(cfg.dim, cfg.dim);
        for (int i = 0; i < cfg.dim; ++i)
          for (int j = 0; j < cfg.dim; ++j) X(i, j) = cplx(g(rng), g(rng));
        X /= std::sqrt(double(cfg.dim));
        res.artifacts.derivations.push_back(derivation_certificate(f, X));
      }
      append(rep.certificates, check_derivation(res.artifacts.derivations, ts));
      rep.diagnostics["derivation_draws"] = cfg.x_count;
      clock.lap("derivation");
    }
  } catch (const Error& e) {
    rep.error_stage = stage;
    rep.error_class = classify(e);
    rep.error_message = e.what();
    clock.lap(stage + ":error");
  }
  return res;
}

void dump_blocks(const ScenarioArtifacts& art, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("blocks: cannot create directory '" + dir + "'");
  auto put = [&](const std::string& name, const Mat& M) {
    write_matrix_csv(M, (fs::path(dir) / (name + ".csv")).string());
  };
  if (art.dec) {
    const HalfSpaceDecomposition2x2& d = *art.dec;
    put("basis_M", d.basis_M);
    put("T11", d.T11);
    put("R", d.R_emb);
    put("T12", d.T12_emb);
    put("similarity_F", d.sim.F);
    put("similarity_L", d.sim.L);
    if (d.T22) put("T22", *d.T22);
    if (d.basis_Mperp) put("basis_M_perp", *d.basis_Mperp);
  }
  if (art.oblique) {
    const ObliqueDecomposition& o = *art.oblique;
    put("oblique_W1", o.W1);
    put("oblique_W2", o.W2);
    put("oblique_T11", o.That11);
    put("oblique_R", o.Rhat_emb);
  }
  if (art.refined) {
    const BlockForm3x3& f = *art.refined;
    put("refine_B1", f.B1);
    put("refine_B3", f.B3);
    put("refine_T11", f.T11);
    put("refine_T33", f.T33);
    put("refine_T13", f.T13);
    put("refine_R31", f.R31);
    put("refine_R21", f.R21_emb);
    put("refine_R32", f.R32_emb);
    put("refine_T12", f.T12_emb);
    put("refine_T23", f.T23_emb);
    if (f.B2) put("refine_B2", *f.B2);
    if (f.T22) put("refine_T22", *f.T22);
  }
}

}  // namespace halfspace
