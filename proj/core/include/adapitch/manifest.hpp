#pragma once

#include <string>
#include <vector>

namespace adapitch {

// One line of a line-delimited JSON manifest. Fields are optional at parse
// time; each trainer stage validates the fields it needs.
struct ManifestEntry {
  std::string id;
  std::string audio;            // path; empty when absent
  std::string text;             // empty when absent
  int speaker = -1;             // -1 when absent
  std::vector<int> durations;   // frames per phoneme; empty when absent
  std::string split = "train";

  bool has_audio() const { return !audio.empty(); }
  bool has_text() const { return !text.empty(); }
  bool has_speaker() const { return speaker >= 0; }
  bool has_durations() const { return !durations.empty(); }
};

std::vector<ManifestEntry> load_manifest(const std::string& path);
void save_manifest(const std::vector<ManifestEntry>& entries, const std::string& path);

/// Throws unless the entry carries every field the stage requires.
void require_fields(const ManifestEntry& e, bool audio, bool text, bool speaker,
                    bool durations);

}  // namespace adapitch
