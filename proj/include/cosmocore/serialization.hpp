#pragma once

#include "cosmocore/program.hpp"
#include "cosmocore/types.hpp"
#include "json.hpp"

// nlohmann ADL hooks for the domain types, so snapshots, corpora and logs
// share one encoding.

namespace cosmocore::miniworld {

void to_json(nlohmann::json& j, const Table& t);
void from_json(const nlohmann::json& j, Table& t);
void to_json(nlohmann::json& j, const Program& p);
void from_json(const nlohmann::json& j, Program& p);

}  // namespace cosmocore::miniworld

namespace cosmocore {

void to_json(nlohmann::json& j, const AffectTag& tag);
void from_json(const nlohmann::json& j, AffectTag& tag);
void to_json(nlohmann::json& j, const Trajectory& t);
void from_json(const nlohmann::json& j, Trajectory& t);
void to_json(nlohmann::json& j, const BufferEntry& e);
void from_json(const nlohmann::json& j, BufferEntry& e);

}  // namespace cosmocore
