#include "adapitch/manifest.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "adapitch/error.hpp"

namespace adapitch {

using nlohmann::json;

std::vector<ManifestEntry> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("manifest: cannot open " + path);
  std::vector<ManifestEntry> entries;
  std::set<std::string> ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ContractViolation("manifest: malformed line " + std::to_string(line_no) + " in " +
                              path + ": " + e.what());
    }
    ManifestEntry e;
    if (!j.contains("id") || !j["id"].is_string())
      throw ContractViolation("manifest: line " + std::to_string(line_no) +
                              " is missing the required field 'id'");
    e.id = j["id"].get<std::string>();
    if (!ids.insert(e.id).second)
      throw ContractViolation("manifest: duplicate utterance id '" + e.id + "' at line " +
                              std::to_string(line_no));
    if (j.contains("audio") && !j["audio"].is_null()) e.audio = j["audio"].get<std::string>();
    if (j.contains("text") && !j["text"].is_null()) e.text = j["text"].get<std::string>();
    if (j.contains("speaker") && !j["speaker"].is_null()) e.speaker = j["speaker"].get<int>();
    if (j.contains("durations") && !j["durations"].is_null())
      e.durations = j["durations"].get<std::vector<int>>();
    if (j.contains("split") && !j["split"].is_null()) e.split = j["split"].get<std::string>();
    entries.push_back(std::move(e));
  }
  return entries;
}

void save_manifest(const std::vector<ManifestEntry>& entries, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("manifest: cannot write " + path);
  for (const auto& e : entries) {
    json j;
    j["id"] = e.id;
    if (e.has_audio()) j["audio"] = e.audio;
    if (e.has_text()) j["text"] = e.text;
    if (e.has_speaker()) j["speaker"] = e.speaker;
    if (e.has_durations()) j["durations"] = e.durations;
    j["split"] = e.split;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("manifest: write failed for " + path);
}

void require_fields(const ManifestEntry& e, bool audio, bool text, bool speaker,
                    bool durations) {
  if (audio && !e.has_audio())
    throw ContractViolation("manifest entry '" + e.id + "' is missing the field 'audio'");
  if (text && !e.has_text())
    throw ContractViolation("manifest entry '" + e.id + "' is missing the field 'text'");
  if (speaker && !e.has_speaker())
    throw ContractViolation("manifest entry '" + e.id + "' is missing the field 'speaker'");
  if (durations && !e.has_durations())
    throw ContractViolation("manifest entry '" + e.id + "' is missing the field 'durations'");
}

}  // namespace adapitch
