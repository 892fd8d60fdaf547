#include "tvlab/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace tvlab {

namespace {

Json vec_to_json(const Vec& v) { return Json(v); }

Vec vec_from_json(const Json& j) {
  if (!j.is_array()) throw SchemaError("expected a numeric array");
  Vec v;
  v.reserve(j.size());
  for (const Json& x : j) v.push_back(x.get<double>());
  return v;
}

}  // namespace

FamilyDocument make_document(Family f, std::map<std::string, std::string> metadata) {
  FamilyDocument doc;
  doc.ambient_dim = f.dim();
  doc.open_flag = f.open();
  if (!doc.open_flag)
    for (const NearBall& b : f.members())
      if (b.open_flag) throw SchemaError("mixed open/closed members in one document");
  doc.family = std::move(f);
  doc.metadata = std::move(metadata);
  return doc;
}

Json to_json(const FamilyDocument& doc) {
  Json j;
  j["version"] = doc.version;
  j["ambient_dim"] = doc.ambient_dim;
  j["open_flag"] = doc.open_flag;
  Json members = Json::array();
  for (const NearBall& b : doc.family.members()) {
    Json m;
    Json parts = Json::array();
    for (const ClosedBall& p : b.parts) {
      Json pj;
      pj["center"] = vec_to_json(p.center);
      pj["radius"] = p.radius;
      parts.push_back(std::move(pj));
    }
    m["parts"] = std::move(parts);
    m["core_index"] = b.core_index;
    members.push_back(std::move(m));
  }
  j["members"] = std::move(members);
  j["metadata"] = doc.metadata;
  return j;
}

FamilyDocument family_from_json(const Json& j) {
  FamilyDocument doc;
  try {
    doc.version = j.at("version").get<std::string>();
    doc.ambient_dim = j.at("ambient_dim").get<int>();
    doc.open_flag = j.at("open_flag").get<bool>();
    std::vector<NearBall> members;
    for (const Json& m : j.at("members")) {
      NearBall b;
      b.open_flag = doc.open_flag;
      b.core_index = m.at("core_index").get<int>();
      for (const Json& p : m.at("parts")) {
        ClosedBall ball;
        ball.center = vec_from_json(p.at("center"));
        ball.radius = p.at("radius").get<double>();
        if (static_cast<int>(ball.center.size()) != doc.ambient_dim)
          throw SchemaError("part dimension disagrees with ambient_dim");
        b.parts.push_back(std::move(ball));
      }
      members.push_back(std::move(b));
    }
    doc.family = Family(std::move(members));
    if (j.contains("metadata"))
      for (const auto& [key, val] : j.at("metadata").items())
        doc.metadata[key] = val.get<std::string>();
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("family document: ") + e.what());
  }
  return doc;
}

std::string dump_document(const Json& j) { return j.dump(2) + "\n"; }

Json flat_to_json(const KFlat& f) {
  Json j;
  j["anchor"] = vec_to_json(f.anchor);
  Json basis = Json::array();
  for (const Vec& v : f.basis) basis.push_back(vec_to_json(v));
  j["basis"] = std::move(basis);
  return j;
}

KFlat flat_from_json(const Json& j) {
  KFlat f;
  f.anchor = vec_from_json(j.at("anchor"));
  for (const Json& v : j.at("basis")) f.basis.push_back(vec_from_json(v));
  return f;
}

namespace {

Json provenance_to_json(const SolverProvenance& p) {
  Json j;
  j["seed"] = p.seed;
  j["restarts"] = p.restarts;
  j["tol_feas"] = p.tol_feas;
  j["tol_indep"] = p.tol_indep;
  j["certified"] = p.certified;
  return j;
}

SolverProvenance provenance_from_json(const Json& j) {
  SolverProvenance p;
  p.seed = j.at("seed").get<uint64_t>();
  p.restarts = j.at("restarts").get<int>();
  p.tol_feas = j.at("tol_feas").get<double>();
  p.tol_indep = j.at("tol_indep").get<double>();
  p.certified = j.at("certified").get<bool>();
  return p;
}

}  // namespace

Json to_json(const CertificateDocument& doc) {
  Json j;
  j["version"] = doc.version;
  j["kind"] = doc.kind;
  j["ambient_dim"] = doc.ambient_dim;
  j["payload"] = doc.payload;
  j["solver_provenance"] = provenance_to_json(doc.provenance);
  return j;
}

CertificateDocument certificate_from_json(const Json& j) {
  CertificateDocument doc;
  try {
    doc.version = j.at("version").get<std::string>();
    doc.kind = j.at("kind").get<std::string>();
    doc.ambient_dim = j.at("ambient_dim").get<int>();
    doc.payload = j.at("payload");
    doc.provenance = provenance_from_json(j.at("solver_provenance"));
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("certificate document: ") + e.what());
  }
  return doc;
}

CertificateDocument make_transversal_certificate(const FamilyDocument& fam,
                                                 const TransversalCertificate& cert,
                                                 const SolveOptions& opts) {
  CertificateDocument doc;
  doc.kind = "transversal";
  doc.ambient_dim = fam.ambient_dim;
  doc.provenance = {opts.seed, opts.restarts, opts.tol_feas, kTolIndep, cert.certified};
  Json payload;
  payload["k"] = cert.k;
  Json flats = Json::array();
  for (const KFlat& f : cert.flats) flats.push_back(flat_to_json(f));
  payload["flats"] = std::move(flats);
  payload["assignment"] = cert.assignment;
  payload["residuals"] = cert.residuals;
  doc.payload = std::move(payload);
  return doc;
}

CertificateDocument make_independence_certificate(const FamilyDocument& fam,
                                                  const IndependenceWitness& witness,
                                                  bool reached_target, const SolveOptions& opts) {
  CertificateDocument doc;
  doc.kind = "independence";
  doc.ambient_dim = fam.ambient_dim;
  doc.provenance = {opts.seed, opts.restarts, opts.tol_feas, witness.tol_indep,
                    witness.certified};
  Json payload;
  payload["k"] = witness.k;
  payload["member_indices"] = witness.member_indices;
  payload["reached_target"] = reached_target;
  payload["affine_checked"] = witness.affine_checked;
  Json evidence = Json::array();
  for (const SubsetEvidence& ev : witness.evidence) {
    Json e;
    e["subset"] = ev.subset;
    e["best_value"] = ev.best_value;
    e["best_flat"] = flat_to_json(ev.best_flat);
    e["certified"] = ev.certified;
    evidence.push_back(std::move(e));
  }
  payload["evidence"] = std::move(evidence);
  doc.payload = std::move(payload);
  return doc;
}

CertificateDocument make_report_certificate(const FamilyDocument* fam, const Json& payload,
                                            const SolveOptions& opts) {
  CertificateDocument doc;
  doc.kind = "report";
  doc.ambient_dim = fam ? fam->ambient_dim : 0;
  doc.provenance = {opts.seed, opts.restarts, opts.tol_feas, kTolIndep, false};
  doc.payload = payload;
  return doc;
}

namespace {

void enumerate_subsets_of(const std::vector<int>& base, int k,
                          const std::function<void(const std::vector<int>&)>& visit) {
  const int n = static_cast<int>(base.size());
  if (k > n) return;
  std::vector<int> idx(static_cast<size_t>(k));
  std::iota(idx.begin(), idx.end(), 0);
  for (;;) {
    std::vector<int> subset;
    subset.reserve(static_cast<size_t>(k));
    for (int i : idx) subset.push_back(base[static_cast<size_t>(i)]);
    visit(subset);
    int i = k - 1;
    while (i >= 0 && idx[static_cast<size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++idx[static_cast<size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<size_t>(j)] = idx[static_cast<size_t>(j - 1)] + 1;
  }
}

bool verify_transversal(const FamilyDocument& fam, const CertificateDocument& cert,
                        std::vector<std::string>& problems) {
  const Json& p = cert.payload;
  const int k = p.at("k").get<int>();
  std::vector<KFlat> flats;
  for (const Json& fj : p.at("flats")) flats.push_back(flat_from_json(fj));
  const std::vector<int> assignment = p.at("assignment").get<std::vector<int>>();
  const std::vector<double> residuals = p.at("residuals").get<std::vector<double>>();
  const Family& f = fam.family;

  if (assignment.size() != f.size() || residuals.size() != f.size()) {
    problems.push_back("assignment/residual size disagrees with the family");
    return false;
  }
  for (const KFlat& fl : flats) {
    if (fl.flat_dim() != k) {
      problems.push_back("certificate flat has wrong dimension");
      return false;
    }
    try {
      validate_flat(fl);
    } catch (const GeomError& e) {
      problems.push_back(std::string("invalid flat: ") + e.what());
      return false;
    }
  }

  bool ok = true;
  for (size_t i = 0; i < f.size(); ++i) {
    const int a = assignment[i];
    if (a < 0 || a >= static_cast<int>(flats.size())) {
      problems.push_back("member " + std::to_string(i) + " unassigned");
      ok = false;
      continue;
    }
    const KFlat& fl = flats[static_cast<size_t>(a)];
    const double recomputed = f[i].open_flag ? member_flat_signed(f[i], fl)
                                             : member_flat_dist(f[i], fl);
    if (std::abs(recomputed - residuals[i]) > 1e-9 * (1.0 + std::abs(recomputed))) {
      problems.push_back("member " + std::to_string(i) + ": stated residual disagrees");
      ok = false;
    }
    const bool pierced = f[i].open_flag ? recomputed < -kTolGeo
                                        : recomputed <= cert.provenance.tol_feas + 1e-12;
    if (!pierced) {
      problems.push_back("member " + std::to_string(i) + " is not pierced by its flat");
      ok = false;
    }
  }
  return ok;
}

bool verify_independence(const FamilyDocument& fam, const CertificateDocument& cert,
                         std::vector<std::string>& problems) {
  const Json& p = cert.payload;
  const int k = p.at("k").get<int>();
  const std::vector<int> indices = p.at("member_indices").get<std::vector<int>>();
  const Family& f = fam.family;
  const double tol_indep = cert.provenance.tol_indep;

  if (tol_indep <= cert.provenance.tol_feas) {
    problems.push_back("tol_indep must exceed tol_feas");
    return false;
  }
  for (int i : indices)
    if (i < 0 || i >= static_cast<int>(f.size())) {
      problems.push_back("witness index out of range");
      return false;
    }

  const int n = static_cast<int>(indices.size());
  bool ok = true;

  if (n >= k + 2) {
    // evidence coverage: every (k+2)-subset exactly once
    std::vector<std::vector<int>> expected;
    enumerate_subsets_of(indices, k + 2, [&](const std::vector<int>& s) { expected.push_back(s); });
    std::vector<std::vector<int>> got;
    for (const Json& e : p.at("evidence")) got.push_back(e.at("subset").get<std::vector<int>>());
    std::sort(expected.begin(), expected.end());
    std::sort(got.begin(), got.end());
    if (expected != got) {
      problems.push_back("evidence does not cover every (k+2)-subset exactly once");
      ok = false;
    }
  }

  for (const Json& e : p.at("evidence")) {
    const std::vector<int> subset = e.at("subset").get<std::vector<int>>();
    const double best_value = e.at("best_value").get<double>();
    if (best_value <= tol_indep) {
      problems.push_back("evidence value within tol_indep: subset not certified disjoint from flats");
      ok = false;
    }
    const KFlat best_flat = flat_from_json(e.at("best_flat"));
    if (best_flat.ambient_dim() == fam.ambient_dim && !best_flat.anchor.empty()) {
      double recomputed = -1.0;
      if (!subset.empty()) {
        double worst = 0.0;
        for (int i : subset)
          worst = std::max(worst, member_flat_dist(f[static_cast<size_t>(i)], best_flat));
        recomputed = worst;
      }
      if (recomputed >= 0.0 && std::abs(recomputed - best_value) > 1e-6 * (1.0 + best_value)) {
        problems.push_back("evidence flat does not reproduce the claimed value");
        ok = false;
      }
    }

    // Cross-check with kernel primitives: flats spanned by core centers of
    // the subset would betray a planted violation (e.g. a collinear triple).
    const int take = std::min(static_cast<int>(subset.size()),
                              std::min(k + 1, fam.ambient_dim));
    enumerate_subsets_of(subset, take, [&](const std::vector<int>& anchor_set) {
      std::vector<Vec> pts;
      for (int i : anchor_set) pts.push_back(f[static_cast<size_t>(i)].core().center);
      KFlat span;
      try {
        span = flat_through_points(pts);
      } catch (const GeomError&) {
        return;
      }
      if (span.flat_dim() > k) return;
      bool all = true;
      for (int i : subset) all = all && pierces(span, f[static_cast<size_t>(i)]);
      if (all) {
        problems.push_back("a core-spanned flat pierces a witness subset");
        ok = false;
      }
    });
  }

  // k = 0 witnesses are exact: re-check pairwise disjointness.
  if (k == 0 && n >= 2) {
    for (size_t a = 0; a < indices.size(); ++a)
      for (size_t b = a + 1; b < indices.size(); ++b) {
        const NearBall& x = f[static_cast<size_t>(indices[a])];
        const NearBall& y = f[static_cast<size_t>(indices[b])];
        const double gap = member_pair_gap(x, y);
        const bool open_pair = x.open_flag && y.open_flag;
        if (open_pair ? gap < -kTolGeo : gap <= kTolGeo) {
          problems.push_back("members " + std::to_string(indices[a]) + "," +
                             std::to_string(indices[b]) + " are not disjoint");
          ok = false;
        }
      }
  }
  return ok;
}

}  // namespace

VerifyOutcome verify_certificate(const FamilyDocument& fam, const CertificateDocument& cert) {
  VerifyOutcome out;
  if (cert.kind != "report" && cert.ambient_dim != fam.ambient_dim) {
    out.problems.push_back("ambient dimension mismatch");
    return out;
  }
  try {
    if (cert.kind == "transversal")
      out.ok = verify_transversal(fam, cert, out.problems);
    else if (cert.kind == "independence")
      out.ok = verify_independence(fam, cert, out.problems);
    else if (cert.kind == "report")
      out.ok = true;  // reports carry no re-checkable residuals
    else
      out.problems.push_back("unknown certificate kind: " + cert.kind);
  } catch (const std::exception& e) {
    out.ok = false;
    out.problems.push_back(std::string("verification error: ") + e.what());
  }
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string render_svg(const FamilyDocument& fam, const std::vector<KFlat>& flats,
                       const std::vector<Wedge>& wedges) {
  if (fam.ambient_dim != 2) throw InvalidOptions("SVG rendering is planar only");
  double lo_x = 1e300, lo_y = 1e300, hi_x = -1e300, hi_y = -1e300;
  for (const NearBall& b : fam.family.members())
    for (const ClosedBall& p : b.parts) {
      lo_x = std::min(lo_x, p.center[0] - p.radius);
      hi_x = std::max(hi_x, p.center[0] + p.radius);
      lo_y = std::min(lo_y, p.center[1] - p.radius);
      hi_y = std::max(hi_y, p.center[1] + p.radius);
    }
  const double pad = 0.1 * std::max(hi_x - lo_x, hi_y - lo_y) + 0.5;
  lo_x -= pad;
  lo_y -= pad;
  hi_x += pad;
  hi_y += pad;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << fmt(lo_x) << " " << fmt(-hi_y)
      << " " << fmt(hi_x - lo_x) << " " << fmt(hi_y - lo_y) << "\">\n";
  svg << "  <g transform=\"scale(1,-1)\">\n";

  for (const NearBall& b : fam.family.members())
    for (const ClosedBall& p : b.parts)
      svg << "    <circle cx=\"" << fmt(p.center[0]) << "\" cy=\"" << fmt(p.center[1]) << "\" r=\""
          << fmt(p.radius) << "\" fill=\"#4477aa\" fill-opacity=\"0.25\" stroke=\"#4477aa\""
          << (b.open_flag ? " stroke-dasharray=\"0.05 0.05\"" : "") << " stroke-width=\""
          << fmt(0.004 * (hi_x - lo_x)) << "\"/>\n";

  const double span = 2.0 * std::max(hi_x - lo_x, hi_y - lo_y);
  for (const KFlat& f : flats) {
    if (f.flat_dim() == 0) {
      svg << "    <circle cx=\"" << fmt(f.anchor[0]) << "\" cy=\"" << fmt(f.anchor[1])
          << "\" r=\"" << fmt(0.01 * (hi_x - lo_x)) << "\" fill=\"#cc3311\"/>\n";
      continue;
    }
    const Vec& dir = f.basis.front();
    svg << "    <line x1=\"" << fmt(f.anchor[0] - span * dir[0]) << "\" y1=\""
        << fmt(f.anchor[1] - span * dir[1]) << "\" x2=\"" << fmt(f.anchor[0] + span * dir[0])
        << "\" y2=\"" << fmt(f.anchor[1] + span * dir[1])
        << "\" stroke=\"#cc3311\" stroke-width=\"" << fmt(0.006 * (hi_x - lo_x)) << "\"/>\n";
  }

  for (const Wedge& w : wedges) {
    for (const KFlat* line : {&w.line1, &w.line2}) {
      const Vec& dir = line->basis.front();
      const Vec a = w.apex;
      svg << "    <line x1=\"" << fmt(a[0] - span * dir[0]) << "\" y1=\"" << fmt(a[1] - span * dir[1])
          << "\" x2=\"" << fmt(a[0] + span * dir[0]) << "\" y2=\"" << fmt(a[1] + span * dir[1])
          << "\" stroke=\"#228833\" stroke-width=\"" << fmt(0.004 * (hi_x - lo_x))
          << "\" stroke-dasharray=\"0.1 0.05\"/>\n";
    }
  }

  svg << "  </g>\n</svg>\n";
  return svg.str();
}

}  // namespace tvlab
