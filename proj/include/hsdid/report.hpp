#pragma once

// JSON views of estimation results. Non-finite numbers serialize as null.

#include <json.hpp>

#include "hsdid/derive.hpp"
#include "hsdid/did.hpp"
#include "hsdid/fe.hpp"
#include "hsdid/match.hpp"
#include "hsdid/panel.hpp"
#include "hsdid/psdiag.hpp"
#include "hsdid/sim.hpp"

namespace hsdid {

using Json = nlohmann::ordered_json;

Json to_json(const IngestReport& r);
Json to_json(const DeriveReport& r);
Json to_json(const FitResultd& fit);
Json to_json(const WaldTest& w);
Json to_json(const FeResult& r);
Json to_json(const CandidateReport& r);
Json to_json(const DidTest& t);
Json to_json(const DidResult& r);
Json to_json(const LogisticFit& fit);
Json to_json(const SupportAssessment& a);
Json to_json(const McReport& r);

/// Two-space indented text with a trailing newline.
std::string dump(const Json& j);

}  // namespace hsdid
