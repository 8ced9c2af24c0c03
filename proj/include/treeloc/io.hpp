#pragma once

#include <map>
#include <string>
#include <vector>

#include "treeloc/experiments.hpp"

namespace treeloc {

/// Applies flat `section.key = value` lines ('#' starts a comment). Sections are
/// sim, assembly, align, tdh, tri, verify, exp and odo. Throws Error(ConfigError)
/// on unknown keys or unparsable values.
void apply_config_text(const std::string& text, RunConfig& cfg);

/// Applies a single key/value pair.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// Every key with its current value, sorted; round-trips through apply_config_text.
std::string config_to_text(const RunConfig& cfg);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

/// Session text: "PAYLOAD index tx ty tz qx qy qz qw" followed by its
/// "TREE id x y z ax ay az dbh obs_count candidate" lines.
std::string session_to_text(const std::vector<Payload>& payloads);
std::vector<Payload> session_from_text(const std::string& text);

/// Same layout with SCENE records.
std::string scenes_to_text(const std::vector<SceneInventory>& scenes);
std::vector<SceneInventory> scenes_from_text(const std::string& text);

/// "index,tx,ty,tz,qx,qy,qz,qw" rows.
std::string poses_to_csv(const std::map<int, Pose>& poses);
std::map<int, Pose> poses_from_csv(const std::string& text);

std::string association_to_csv(const std::vector<AssociationRow>& rows);
std::string world_to_text(const std::vector<WorldTree>& world);

/// Config, seeds and version, written next to every output.
std::string manifest_text(const std::string& command, const RunConfig& cfg,
                          const std::vector<std::string>& inputs = {});

}  // namespace treeloc
