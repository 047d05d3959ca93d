#pragma once

// JSON and CSV renderings of the library's results. JSON objects keep
// insertion order so identical inputs give byte-identical reports.

#include "etz/cuq.hpp"
#include "etz/decomposition.hpp"
#include "etz/estimators.hpp"
#include "etz/moments.hpp"
#include "etz/simulation.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace etz::report {

using Json = nlohmann::ordered_json;

Json to_json(const VisitMoments& m);
/// Adds tau_hat: a number for two arms, an object keyed by arm otherwise.
Json to_json(const VisitMoments& m, const ArmVisitMeans& means);
Json to_json(const CovTermReport& t);
Json to_json(const EtzComponents& c, const VisitMoments& m, const FeasibilityVerdict& v);
Json to_json(const CuqReport& r);
Json to_json(const std::vector<EntryCriterionRow>& rows);
Json to_json(const BiasReport& b);
Json to_json(const BiasStudy& s);
Json to_json(const SimConfig& cfg);
Json to_json(const OutcomeModelParams& p);

/// Throws non_finite if any number in `j` is NaN or infinite.
void require_finite(const Json& j);

/// Pretty-printed with two-space indent and a trailing newline.
std::string dump(const Json& j);

std::string entry_criterion_csv(const std::vector<EntryCriterionRow>& rows);

/// One row per (replicate, evaluation point).
std::string replicate_csv(const BiasStudy& s);

}  // namespace etz::report
