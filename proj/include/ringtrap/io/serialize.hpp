#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "ringtrap/crystal.hpp"
#include "ringtrap/pseudopotential.hpp"
#include "ringtrap/structure.hpp"
#include "ringtrap/sweep.hpp"

namespace ringtrap::io {

using nlohmann::json;

json to_json(const Vec3& v);
json to_json(const Positions& p);
json to_json(const CrystalState& s);
json to_json(const StructureReport& r);
json to_json(const MicromotionMap& m);
/// Frequencies in Hz (signed for unstable modes) plus the raw eigen data.
json to_json(const ModeSpectrum& m);
/// Hz along principal axes, plus the minimum and axes.
json to_json(const SecularFrequencies& s);
json to_json(const SweepPoint& p);
json to_json(const RfAnalysis& a);
json to_json(const SymmetryCheck& c);

/// Reads back a state written by `to_json(CrystalState)`. Throws ConfigError
/// on schema problems.
CrystalState state_from_json(const json& j);
/// Throws IoError when unreadable.
CrystalState load_state(const std::filesystem::path& path);

/// Pretty JSON with a trailing newline. Byte-stable for identical values.
std::string dump(const json& j);

/// Columns: ion_index, nn_distance_m.
std::string spacing_csv(const StructureReport& report);

/// Shortest representation that round-trips, as used in CSV cells.
std::string format_double(double v);

}  // namespace ringtrap::io
