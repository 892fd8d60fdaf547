#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "tvlab/io.hpp"
#include "tvlab/runtime.hpp"

namespace tvlab {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitUndecided = 2;
constexpr int kExitInternal = 3;

std::string read_input(const std::string& path) {
  if (path.empty() || path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open input file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot open output file: " + path);
  out << text;
}

FamilyDocument load_family(const std::string& path) {
  return family_from_json(Json::parse(read_input(path)));
}

struct CommonIo {
  std::string in;
  std::string out;
};

void add_io(CLI::App* cmd, CommonIo& io) {
  cmd->add_option("--in", io.in, "input family document (default: stdin)");
  cmd->add_option("--out", io.out, "output document (default: stdout)");
}

struct SolveFlags {
  SolveOptions opts;
  void attach(CLI::App* cmd) {
    cmd->add_option("--tol", opts.tol_feas, "feasibility tolerance");
    cmd->add_option("--seed", opts.seed, "random seed");
    cmd->add_option("--restarts", opts.restarts, "solver restarts");
  }
};

Json claim_report_to_json(const ClaimReport& rep) {
  Json j;
  j["claim"] = rep.claim;
  j["trials"] = rep.trials;
  j["violations"] = rep.violations;
  j["max_observed"] = rep.max_observed;
  j["bound"] = rep.bound;
  j["premise_ok"] = rep.premise_ok;
  j["params"] = rep.params;
  return j;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv) {
  CLI::App app{"transversal-lab: k-flat transversals of near-ball families"};
  app.require_subcommand(1);

  // ---- gen ----------------------------------------------------------------
  CLI::App* gen = app.add_subcommand("gen", "generate a family document");
  gen->require_subcommand(1);
  CommonIo gen_io;
  int gen_n = 12;
  uint64_t gen_seed = 7;
  bool gen_closed = false;

  CLI::App* gen_discs = gen->add_subcommand("discs", "the open-disc counterexample family");
  gen_discs->add_option("--n", gen_n, "number of discs");
  gen_discs->add_flag("--closed", gen_closed, "closed-disc variant");
  add_io(gen_discs, gen_io);

  CLI::App* gen_segments = gen->add_subcommand("segments", "pairwise-crossing chord family");
  gen_segments->add_option("--n", gen_n, "number of chords");
  gen_segments->add_option("--seed", gen_seed, "jitter seed");
  add_io(gen_segments, gen_io);

  CLI::App* gen_family2 = gen->add_subcommand("family2", "far-disc plus chord family");
  gen_family2->add_option("--n", gen_n, "number of members");
  gen_family2->add_option("--seed", gen_seed, "jitter seed");
  add_io(gen_family2, gen_io);

  CLI::App* gen_random = gen->add_subcommand("random", "random near-ball family");
  int rand_d = 2, rand_parts = 1;
  double rand_spread = 10.0, rand_rmin = 0.1, rand_rmax = 2.0;
  gen_random->add_option("--n", gen_n, "number of members");
  gen_random->add_option("--d", rand_d, "ambient dimension");
  gen_random->add_option("--parts", rand_parts, "max parts per member");
  gen_random->add_option("--spread", rand_spread, "center box half-width");
  gen_random->add_option("--rmin", rand_rmin, "min radius");
  gen_random->add_option("--rmax", rand_rmax, "max radius");
  gen_random->add_option("--seed", gen_seed, "seed");
  add_io(gen_random, gen_io);

  // ---- check-nearball -------------------------------------------------------
  CLI::App* check = app.add_subcommand("check-nearball", "near-ball constant and stats");
  CommonIo check_io;
  std::vector<double> r_grid;
  check->add_option("--r-grid", r_grid, "radii for the weakened-condition table");
  add_io(check, check_io);

  // ---- pierce ---------------------------------------------------------------
  CLI::App* pierce_cmd = app.add_subcommand("pierce", "pierce with at most m k-flats");
  CommonIo pierce_io;
  SolveFlags pierce_flags;
  int pierce_k = 0, pierce_m = 1;
  pierce_cmd->add_option("--k", pierce_k, "flat dimension")->required();
  pierce_cmd->add_option("--m", pierce_m, "flat budget")->required();
  pierce_flags.attach(pierce_cmd);
  add_io(pierce_cmd, pierce_io);

  // ---- independent ------------------------------------------------------------
  CLI::App* indep = app.add_subcommand("independent", "greedy independent subsequence");
  CommonIo indep_io;
  SolveFlags indep_flags;
  int indep_k = 1, indep_target = 3;
  indep->add_option("--k", indep_k, "flat dimension")->required();
  indep->add_option("--target", indep_target, "target subsequence length")->required();
  indep_flags.attach(indep);
  add_io(indep, indep_io);

  // ---- dichotomy -----------------------------------------------------------
  CLI::App* dich = app.add_subcommand("dichotomy", "finite transversal/independence dichotomy");
  CommonIo dich_io;
  SolveFlags dich_flags;
  int dich_k = 1, dich_budget = 4, dich_target = 0;
  dich->add_option("--k", dich_k, "flat dimension")->required();
  dich->add_option("--budget", dich_budget, "piercing budget")->required();
  dich->add_option("--target", dich_target, "independence target (default k+2)");
  dich_flags.attach(dich);
  add_io(dich, dich_io);

  // ---- verify-claims ---------------------------------------------------------
  CLI::App* claims = app.add_subcommand("verify-claims", "Monte-Carlo claim verification");
  claims->require_subcommand(1);
  CommonIo claims_io;
  double cl_K = 2.0, cl_D = 10.0, cl_eps1 = 0.1, cl_alpha = 0.0, cl_premise = 1.0;
  int cl_trials = 10000, cl_dim = 3;
  uint64_t cl_seed = 7;

  CLI::App* claim_cone = claims->add_subcommand("cone", "inflated sets stay in the cone");
  claim_cone->add_option("--K", cl_K, "near-ball constant")->required();
  claim_cone->add_option("--D", cl_D, "inflation radius")->required();
  claim_cone->add_option("--eps1", cl_eps1, "outer cone aperture")->required();
  claim_cone->add_option("--trials", cl_trials, "Monte-Carlo trials");
  claim_cone->add_option("--seed", cl_seed, "seed");
  claim_cone->add_option("--d", cl_dim, "ambient dimension");
  claim_cone->add_option("--premise-scale", cl_premise, "widen eps' to break the premise");
  add_io(claim_cone, claims_io);

  CLI::App* claim_wide = claims->add_subcommand("wide-cone", "escribed balls in the pi/4 cone");
  claim_wide->add_option("--K", cl_K, "near-ball constant")->required();
  claim_wide->add_option("--alpha", cl_alpha, "cone aperture (default 0.9 of the premise cap)");
  claim_wide->add_option("--trials", cl_trials, "Monte-Carlo trials");
  claim_wide->add_option("--seed", cl_seed, "seed");
  claim_wide->add_option("--d", cl_dim, "ambient dimension");
  add_io(claim_wide, claims_io);

  CLI::App* claim_ktok = claims->add_subcommand("ktok", "central projection ratio bound");
  claim_ktok->add_option("--K", cl_K, "near-ball constant")->required();
  claim_ktok->add_option("--trials", cl_trials, "Monte-Carlo trials");
  claim_ktok->add_option("--seed", cl_seed, "seed");
  claim_ktok->add_option("--d", cl_dim, "ambient dimension");
  add_io(claim_ktok, claims_io);

  // ---- project ---------------------------------------------------------------
  CLI::App* project = app.add_subcommand("project", "project a family to R^{d-1}");
  project->require_subcommand(1);
  CommonIo project_io;
  CLI::App* proj_orth = project->add_subcommand("orthogonal", "drop the last coordinate");
  add_io(proj_orth, project_io);
  CLI::App* proj_central = project->add_subcommand("central", "central projection from the origin");
  double central_aperture = 0.25;
  proj_central->add_option("--aperture", central_aperture, "cone aperture around -e_d");
  add_io(proj_central, project_io);

  // ---- verify ----------------------------------------------------------------
  CLI::App* verify_cmd = app.add_subcommand("verify", "re-check a certificate offline");
  std::string verify_family, verify_cert;
  verify_cmd->add_option("--family", verify_family, "family document")->required();
  verify_cmd->add_option("--cert", verify_cert, "certificate document")->required();

  // ---- render ----------------------------------------------------------------
  CLI::App* render_cmd = app.add_subcommand("render", "emit a deterministic SVG scene");
  CommonIo render_io;
  std::string render_flats;
  render_cmd->add_option("--flats", render_flats, "optional transversal certificate to draw");
  add_io(render_cmd, render_io);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    SolveOptions base_opts;

    if (gen->parsed()) {
      FamilyDocument doc;
      if (gen_discs->parsed()) {
        doc = make_document(counterexample_discs(gen_n, gen_closed),
                            {{"generator", "discs"},
                             {"n", std::to_string(gen_n)},
                             {"closed", gen_closed ? "true" : "false"}});
      } else if (gen_segments->parsed()) {
        doc = make_document(segments_family(gen_n, gen_seed),
                            {{"generator", "segments"},
                             {"n", std::to_string(gen_n)},
                             {"seed", std::to_string(gen_seed)}});
      } else if (gen_family2->parsed()) {
        doc = make_document(sharpness_family2(gen_n, gen_seed),
                            {{"generator", "family2"},
                             {"n", std::to_string(gen_n)},
                             {"seed", std::to_string(gen_seed)}});
      } else {
        Rng rng(gen_seed);
        std::vector<NearBall> members;
        for (int i = 0; i < gen_n; ++i) {
          NearBall b;
          Vec c(static_cast<size_t>(rand_d));
          for (double& x : c) x = rng.uniform(-rand_spread, rand_spread);
          const double r = rng.uniform(rand_rmin, rand_rmax);
          b.parts.push_back({c, r});
          const int extra = rand_parts > 1 ? rng.uniform_int(rand_parts) : 0;
          for (int e = 0; e < extra; ++e) {
            Vec pc = c;
            axpy(pc, rng.uniform(0.0, 2.0 * r), rng.unit_vec(rand_d));
            b.parts.push_back({pc, rng.uniform(0.2, 1.0) * r});
          }
          members.push_back(std::move(b));
        }
        doc = make_document(Family(std::move(members)),
                            {{"generator", "random"},
                             {"n", std::to_string(gen_n)},
                             {"seed", std::to_string(gen_seed)}});
      }
      write_output(gen_io.out, dump_document(to_json(doc)));
      return kExitOk;
    }

    if (check->parsed()) {
      const FamilyDocument doc = load_family(check_io.in);
      Json out;
      out["K"] = doc.family.constant();
      Json table = Json::array();
      for (const MemberConstant& row : nearball_constant_table(doc.family)) {
        Json r;
        r["r_in"] = row.r_in;
        r["r_esc"] = row.r_esc;
        r["ratio"] = row.ratio;
        r["diff"] = row.diff;
        table.push_back(std::move(r));
      }
      out["members"] = std::move(table);
      if (!r_grid.empty()) {
        Json weak = Json::array();
        for (const WeakConditionRow& row : check_weak_condition_r(doc.family, r_grid)) {
          Json r;
          r["r"] = row.r;
          r["sup_r_esc"] = row.sup_r_esc;
          r["count"] = row.count;
          weak.push_back(std::move(r));
        }
        out["weak_condition"] = std::move(weak);
      }
      write_output(check_io.out,
                   dump_document(to_json(make_report_certificate(&doc, out, base_opts))));
      return kExitOk;
    }

    if (pierce_cmd->parsed()) {
      const FamilyDocument doc = load_family(pierce_io.in);
      const PierceResult res = pierce_with_m_flats(doc.family, pierce_k, pierce_m,
                                                   pierce_flags.opts);
      if (res.success) {
        write_output(pierce_io.out, dump_document(to_json(make_transversal_certificate(
                                        doc, res.cert, pierce_flags.opts))));
        return kExitOk;
      }
      Json out;
      out["result"] = "no transversal found";
      out["best_residual"] = res.best_residual;
      out["exhaustive"] = res.exhaustive;
      out["certified_impossible"] = res.exhaustive && pierce_k == 0;
      write_output(pierce_io.out,
                   dump_document(to_json(make_report_certificate(&doc, out, pierce_flags.opts))));
      return (res.exhaustive && pierce_k == 0) ? kExitOk : kExitUndecided;
    }

    if (indep->parsed()) {
      const FamilyDocument doc = load_family(indep_io.in);
      const GreedySubsequenceResult res =
          greedy_independent_subsequence(doc.family, indep_k, indep_target, indep_flags.opts);
      write_output(indep_io.out, dump_document(to_json(make_independence_certificate(
                                     doc, res.witness, res.reached_target, indep_flags.opts))));
      return kExitOk;
    }

    if (dich->parsed()) {
      const FamilyDocument doc = load_family(dich_io.in);
      const GreedyPiercing upper = greedy_piercing_upper(doc.family, dich_k, dich_flags.opts);
      if (upper.m <= dich_budget) {
        write_output(dich_io.out, dump_document(to_json(make_transversal_certificate(
                                      doc, upper.cert, dich_flags.opts))));
        return kExitOk;
      }
      const int target = dich_target > 0 ? dich_target : dich_k + 2;
      const GreedySubsequenceResult res =
          greedy_independent_subsequence(doc.family, dich_k, target, dich_flags.opts);
      if (res.reached_target) {
        write_output(dich_io.out, dump_document(to_json(make_independence_certificate(
                                      doc, res.witness, true, dich_flags.opts))));
        return kExitOk;
      }
      Json out;
      out["result"] = "UNDECIDED";
      out["piercing_upper_bound"] = upper.m;
      out["budget"] = dich_budget;
      out["independence_reached"] = static_cast<int>(res.accepted.size());
      out["independence_target"] = target;
      write_output(dich_io.out,
                   dump_document(to_json(make_report_certificate(&doc, out, dich_flags.opts))));
      return kExitUndecided;
    }

    if (claims->parsed()) {
      ClaimReport rep;
      if (claim_cone->parsed()) {
        rep = verify_claim_cone(cl_K, cl_D, cl_eps1, cl_trials, cl_seed, cl_dim, cl_premise);
      } else if (claim_wide->parsed()) {
        const double cap = (3.14159265358979323846 / 4.0) / (1.0 + 3.14159265358979323846 * cl_K / 2.0);
        const double alpha = cl_alpha > 0.0 ? cl_alpha : 0.9 * cap;
        rep = verify_claim_wide_cone(cl_K, alpha, cl_trials, cl_seed, cl_dim);
      } else {
        rep = verify_claim_ktok(cl_K, cl_trials, cl_seed, cl_dim);
      }
      write_output(claims_io.out, dump_document(to_json(make_report_certificate(
                                      nullptr, claim_report_to_json(rep), base_opts))));
      if (rep.premise_ok && rep.violations > 0) return kExitInternal;
      return kExitOk;
    }

    if (project->parsed()) {
      const FamilyDocument doc = load_family(project_io.in);
      Family out_family;
      std::map<std::string, std::string> meta = doc.metadata;
      if (proj_orth->parsed()) {
        out_family = orthogonal_project_family(doc.family);
        meta["projection"] = "orthogonal";
      } else {
        Vec axis = zeros(doc.ambient_dim);
        axis[static_cast<size_t>(doc.ambient_dim - 1)] = -1.0;
        out_family = central_project_family(doc.family, Cone{axis, central_aperture});
        meta["projection"] = "central";
      }
      write_output(project_io.out, dump_document(to_json(make_document(out_family, meta))));
      return kExitOk;
    }

    if (verify_cmd->parsed()) {
      const FamilyDocument fam = family_from_json(Json::parse(read_input(verify_family)));
      const CertificateDocument cert =
          certificate_from_json(Json::parse(read_input(verify_cert)));
      const VerifyOutcome out = verify_certificate(fam, cert);
      Json j;
      j["ok"] = out.ok;
      j["problems"] = out.problems;
      std::cout << dump_document(j);
      return out.ok ? kExitOk : kExitInvalid;
    }

    if (render_cmd->parsed()) {
      const FamilyDocument doc = load_family(render_io.in);
      std::vector<KFlat> flats;
      if (!render_flats.empty()) {
        const CertificateDocument cert =
            certificate_from_json(Json::parse(read_input(render_flats)));
        if (cert.kind == "transversal")
          for (const Json& fj : cert.payload.at("flats")) flats.push_back(flat_from_json(fj));
      }
      write_output(render_io.out, render_svg(doc, flats));
      return kExitOk;
    }
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const InvalidOptions& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const GeomError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInvalid;
}

}  // namespace tvlab
