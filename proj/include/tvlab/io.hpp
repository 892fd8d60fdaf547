#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tvlab/independence.hpp"

namespace tvlab {

using Json = nlohmann::ordered_json;

inline constexpr const char* kDocumentVersion = "1.0.0";

// On-disk family format. Round-trips bit-exactly: numbers are emitted as
// shortest decimal strings that parse back to the same double.
struct FamilyDocument {
  std::string version = kDocumentVersion;
  int ambient_dim = 0;
  bool open_flag = false;
  Family family;
  std::map<std::string, std::string> metadata;
};

FamilyDocument make_document(Family f, std::map<std::string, std::string> metadata = {});
Json to_json(const FamilyDocument& doc);
FamilyDocument family_from_json(const Json& j);
std::string dump_document(const Json& j);  // canonical 2-space indent + newline

struct SolverProvenance {
  uint64_t seed = 0;
  int restarts = 0;
  double tol_feas = 0.0;
  double tol_indep = 0.0;
  bool certified = false;
};

struct CertificateDocument {
  std::string version = kDocumentVersion;
  std::string kind;  // "transversal" | "independence" | "report"
  int ambient_dim = 0;
  Json payload;
  SolverProvenance provenance;
};

Json to_json(const CertificateDocument& doc);
CertificateDocument certificate_from_json(const Json& j);

CertificateDocument make_transversal_certificate(const FamilyDocument& fam,
                                                 const TransversalCertificate& cert,
                                                 const SolveOptions& opts);
CertificateDocument make_independence_certificate(const FamilyDocument& fam,
                                                  const IndependenceWitness& witness,
                                                  bool reached_target,
                                                  const SolveOptions& opts);
CertificateDocument make_report_certificate(const FamilyDocument* fam, const Json& payload,
                                            const SolveOptions& opts);

Json flat_to_json(const KFlat& f);
KFlat flat_from_json(const Json& j);

// Offline re-validation with kernel primitives only (no optimization): all
// residual and evidence claims are recomputed against the family document.
// Independence evidence is additionally cross-checked against the flats
// spanned by member core centers, which catches planted violations such as a
// collinear triple.
struct VerifyOutcome {
  bool ok = false;
  std::vector<std::string> problems;
};

VerifyOutcome verify_certificate(const FamilyDocument& fam, const CertificateDocument& cert);

// Deterministic SVG scene for d = 2: parts as circles (open members dashed),
// certificate flats as clipped lines, wedges as rays from the apex.
std::string render_svg(const FamilyDocument& fam, const std::vector<KFlat>& flats = {},
                       const std::vector<Wedge>& wedges = {});

// CLI entry point, exposed for tests. Exit codes: 0 success, 1 invalid
// input, 2 undecided, 3 internal assertion.
int cli_dispatch(int argc, const char* const* argv);

}  // namespace tvlab
