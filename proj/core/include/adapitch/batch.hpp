#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace adapitch {

// One preprocessed utterance. Sequence fields may be empty depending on the
// training stage.
struct SequenceItem {
  std::string id;
  std::vector<int> tokens;
  std::vector<float> mel;  // row-major [frames, bins], cropped to sum(durations)
  int mel_frames = 0;
  int mel_bins = 0;
  std::vector<float> log_f0;   // per frame, 0 where unvoiced
  std::vector<float> voiced;   // per frame, 0/1
  std::vector<int> durations;
  int speaker = -1;
};

// Rectangular padded views plus masks. Padded positions hold PAD/zero and are
// excluded from every loss through the masks; model code reads the unpadded
// prefix per item.
struct PaddedBatch {
  std::vector<int> item_indices;  // into the source corpus
  int batch = 0;
  int max_tokens = 0;
  int max_frames = 0;
  int bins = 0;

  std::vector<int> tokens;        // [batch, max_tokens]
  std::vector<float> token_mask;  // [batch, max_tokens]
  std::vector<float> mel;         // [batch, max_frames, bins]
  std::vector<float> frame_mask;  // [batch, max_frames]
  std::vector<float> log_f0;      // [batch, max_frames]
  std::vector<float> voiced;      // [batch, max_frames]
  std::vector<std::vector<int>> durations;  // ragged
  std::vector<int> speakers;

  int token_count(int b) const;
  int frame_count(int b) const;
  std::vector<int> tokens_of(int b) const;
  std::vector<float> mel_of(int b) const;      // [frame_count, bins]
  std::vector<float> log_f0_of(int b) const;
  std::vector<float> voiced_of(int b) const;
};

PaddedBatch make_padded_batch(const std::vector<SequenceItem>& items,
                              const std::vector<int>& indices);

// Deterministic batch stream: a seeded shuffle per epoch; iteration order is
// a pure function of (item count, seed, epoch).
class BatchStream {
 public:
  BatchStream(const std::vector<SequenceItem>* items, int batch_size, uint64_t seed);

  PaddedBatch next();
  int epoch() const { return epoch_; }

 private:
  void reshuffle();

  const std::vector<SequenceItem>* items_;
  int batch_size_;
  uint64_t seed_;
  int epoch_ = 0;
  size_t cursor_ = 0;
  std::vector<int> order_;
};

}  // namespace adapitch
