#include "adapitch/batch.hpp"

#include <numeric>

#include "adapitch/error.hpp"
#include "adapitch/rng.hpp"

namespace adapitch {

int PaddedBatch::token_count(int b) const {
  int n = 0;
  for (int i = 0; i < max_tokens; ++i)
    if (token_mask[static_cast<size_t>(b) * max_tokens + i] != 0.0f) ++n;
  return n;
}

int PaddedBatch::frame_count(int b) const {
  int n = 0;
  for (int i = 0; i < max_frames; ++i)
    if (frame_mask[static_cast<size_t>(b) * max_frames + i] != 0.0f) ++n;
  return n;
}

std::vector<int> PaddedBatch::tokens_of(int b) const {
  const int n = token_count(b);
  return {tokens.begin() + static_cast<long>(b) * max_tokens,
          tokens.begin() + static_cast<long>(b) * max_tokens + n};
}

std::vector<float> PaddedBatch::mel_of(int b) const {
  const int n = frame_count(b);
  return {mel.begin() + static_cast<long>(b) * max_frames * bins,
          mel.begin() + static_cast<long>(b) * max_frames * bins + static_cast<long>(n) * bins};
}

std::vector<float> PaddedBatch::log_f0_of(int b) const {
  const int n = frame_count(b);
  return {log_f0.begin() + static_cast<long>(b) * max_frames,
          log_f0.begin() + static_cast<long>(b) * max_frames + n};
}

std::vector<float> PaddedBatch::voiced_of(int b) const {
  const int n = frame_count(b);
  return {voiced.begin() + static_cast<long>(b) * max_frames,
          voiced.begin() + static_cast<long>(b) * max_frames + n};
}

PaddedBatch make_padded_batch(const std::vector<SequenceItem>& items,
                              const std::vector<int>& indices) {
  check(!indices.empty(), "batch: empty index list");
  PaddedBatch batch;
  batch.item_indices = indices;
  batch.batch = static_cast<int>(indices.size());
  for (int idx : indices) {
    const auto& it = items[static_cast<size_t>(idx)];
    batch.max_tokens = std::max(batch.max_tokens, static_cast<int>(it.tokens.size()));
    batch.max_frames = std::max(batch.max_frames, it.mel_frames);
    batch.bins = std::max(batch.bins, it.mel_bins);
  }
  const int B = batch.batch, T = batch.max_tokens, F = batch.max_frames, M = batch.bins;
  batch.tokens.assign(static_cast<size_t>(B) * T, 0);
  batch.token_mask.assign(static_cast<size_t>(B) * T, 0.0f);
  batch.mel.assign(static_cast<size_t>(B) * F * M, 0.0f);
  batch.frame_mask.assign(static_cast<size_t>(B) * F, 0.0f);
  batch.log_f0.assign(static_cast<size_t>(B) * F, 0.0f);
  batch.voiced.assign(static_cast<size_t>(B) * F, 0.0f);
  batch.durations.resize(static_cast<size_t>(B));
  batch.speakers.resize(static_cast<size_t>(B));
  for (int b = 0; b < B; ++b) {
    const auto& it = items[static_cast<size_t>(indices[static_cast<size_t>(b)])];
    for (size_t i = 0; i < it.tokens.size(); ++i) {
      batch.tokens[static_cast<size_t>(b) * T + i] = it.tokens[i];
      batch.token_mask[static_cast<size_t>(b) * T + i] = 1.0f;
    }
    for (int f = 0; f < it.mel_frames; ++f) {
      batch.frame_mask[static_cast<size_t>(b) * F + f] = 1.0f;
      for (int m = 0; m < it.mel_bins; ++m)
        batch.mel[(static_cast<size_t>(b) * F + f) * M + m] =
            it.mel[static_cast<size_t>(f) * it.mel_bins + m];
    }
    for (size_t f = 0; f < it.log_f0.size(); ++f) {
      batch.log_f0[static_cast<size_t>(b) * F + f] = it.log_f0[f];
      batch.voiced[static_cast<size_t>(b) * F + f] = it.voiced[f];
    }
    batch.durations[static_cast<size_t>(b)] = it.durations;
    batch.speakers[static_cast<size_t>(b)] = it.speaker;
  }
  return batch;
}

BatchStream::BatchStream(const std::vector<SequenceItem>* items, int batch_size, uint64_t seed)
    : items_(items), batch_size_(batch_size), seed_(seed) {
  check(items_ != nullptr && !items_->empty(), "batch stream: empty corpus");
  check(batch_size_ >= 1, "batch stream: batch size must be positive");
  reshuffle();
}

void BatchStream::reshuffle() {
  order_.resize(items_->size());
  std::iota(order_.begin(), order_.end(), 0);
  Rng rng(seed_ * 2654435761ull + static_cast<uint64_t>(epoch_));
  rng.shuffle(order_);
  cursor_ = 0;
}

PaddedBatch BatchStream::next() {
  if (cursor_ >= order_.size()) {
    ++epoch_;
    reshuffle();
  }
  const size_t take = std::min(static_cast<size_t>(batch_size_), order_.size() - cursor_);
  std::vector<int> indices(order_.begin() + static_cast<long>(cursor_),
                           order_.begin() + static_cast<long>(cursor_ + take));
  cursor_ += take;
  return make_padded_batch(*items_, indices);
}

}  // namespace adapitch
