#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "adapitch/batch.hpp"
#include "adapitch/checkpoint.hpp"
#include "adapitch/manifest.hpp"
#include "adapitch/pitch.hpp"
#include "adapitch/toy_corpus.hpp"
#include "adapitch/wav.hpp"

using namespace adapitch;

namespace {

std::string temp_dir(const std::string& name) {
  const auto path = std::filesystem::temp_directory_path() / ("adapitch_" + name);
  std::filesystem::remove_all(path);
  std::filesystem::create_directories(path);
  return path.string();
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ToyCorpusSpec small_spec(uint64_t seed = 7) {
  ToyCorpusSpec spec;
  spec.num_utterances = 4;
  spec.num_speakers = 2;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_SUITE_BEGIN("data");

TEST_CASE("manifest parsing: order, empty file, malformed lines, duplicates") {
  const std::string dir = temp_dir("manifest");
  const std::string path = dir + "/m.jsonl";

  {
    std::ofstream out(path);
  }
  CHECK(load_manifest(path).empty());

  {
    std::ofstream out(path);
    out << R"({"id":"a","text":"x y"})" << "\n";
    out << R"({"id":"b","audio":"b.wav","speaker":1,"durations":[5,6]})" << "\n";
    out << R"({"id":"c","split":"dev"})" << "\n";
  }
  const auto entries = load_manifest(path);
  REQUIRE(entries.size() == 3);
  CHECK(entries[0].id == "a");
  CHECK(entries[1].id == "b");
  CHECK(entries[2].id == "c");
  CHECK(entries[1].durations == std::vector<int>{5, 6});
  CHECK(entries[2].split == "dev");

  {
    std::ofstream out(path);
    out << "not json\n";
  }
  CHECK_THROWS_AS(load_manifest(path), ContractViolation);

  {
    std::ofstream out(path);
    out << R"({"id":"a"})" << "\n" << R"({"id":"a"})" << "\n";
  }
  CHECK_THROWS_AS(load_manifest(path), ContractViolation);
}

TEST_CASE("stage requirements name the missing field") {
  ManifestEntry e;
  e.id = "u1";
  e.text = "a b";
  try {
    require_fields(e, true, true, false, false);
    FAIL("expected a contract violation");
  } catch (const ContractViolation& err) {
    CHECK(std::string(err.what()).find("audio") != std::string::npos);
  }
}

TEST_CASE("manifest round trip preserves entries") {
  const std::string dir = temp_dir("manifest_rt");
  std::vector<ManifestEntry> entries(3);
  entries[0].id = "u0";
  entries[0].text = "w01 w02";
  entries[1].id = "u1";
  entries[1].audio = "a.wav";
  entries[1].speaker = 1;
  entries[1].durations = {5, 9};
  entries[2].id = "u2";
  entries[2].split = "dev";
  save_manifest(entries, dir + "/m.jsonl");
  const auto loaded = load_manifest(dir + "/m.jsonl");
  REQUIRE(loaded.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(loaded[i].id == entries[i].id);
    CHECK(loaded[i].audio == entries[i].audio);
    CHECK(loaded[i].text == entries[i].text);
    CHECK(loaded[i].speaker == entries[i].speaker);
    CHECK(loaded[i].durations == entries[i].durations);
    CHECK(loaded[i].split == entries[i].split);
  }
}

TEST_CASE("toy corpus is byte-identical for a fixed seed") {
  const std::string dir_a = temp_dir("corpus_a");
  const std::string dir_b = temp_dir("corpus_b");
  const ToyCorpus a = generate_toy_corpus(small_spec(), dir_a);
  const ToyCorpus b = generate_toy_corpus(small_spec(), dir_b);
  REQUIRE(a.entries.size() == b.entries.size());
  for (size_t i = 0; i < a.entries.size(); ++i) {
    const auto wav_a = read_bytes(a.entries[i].audio);
    const auto wav_b = read_bytes(b.entries[i].audio);
    CHECK(wav_a == wav_b);
  }
  CHECK(read_bytes(a.manifest_path).size() > 0);
  // manifests differ only in absolute paths; lexicon bytes must match
  CHECK(read_bytes(a.lexicon_path) == read_bytes(b.lexicon_path));
}

TEST_CASE("toy corpus ground truth is exact: sum(durations) * hop samples") {
  const std::string dir = temp_dir("corpus_len");
  const ToyCorpusSpec spec = small_spec(11);
  const ToyCorpus corpus = generate_toy_corpus(spec, dir);
  for (const auto& e : corpus.entries) {
    int frames = 0;
    for (int d : e.durations) frames += d;
    const Waveform wave = load_wav(e.audio);
    CHECK(wave.samples.size() == static_cast<size_t>(frames) * spec.mel.hop);
  }
}

TEST_CASE("estimated pitch tracks the rendered contour within 2 percent") {
  const std::string dir = temp_dir("corpus_pitch");
  const ToyCorpusSpec spec = small_spec(13);
  const ToyCorpus corpus = generate_toy_corpus(spec, dir);
  PitchConfig cfg;
  cfg.sample_rate = spec.mel.sample_rate;
  cfg.hop = spec.mel.hop;
  for (size_t u = 0; u < corpus.entries.size(); ++u) {
    const Waveform wave = load_wav(corpus.entries[u].audio);
    const PitchContour est = estimate_pitch(wave, cfg);
    const auto& truth = corpus.true_f0[u];
    double err = 0.0;
    int used = 0;
    for (size_t f = 0; f < truth.size(); ++f) {
      if (!est.voiced[f]) continue;
      err += std::fabs(est.f0[f] - truth[f]) / truth[f];
      ++used;
    }
    REQUIRE(used > 0);
    CHECK(err / used <= 0.02);
  }
}

TEST_CASE("f0 contour files round trip") {
  const std::string dir = temp_dir("f0");
  const std::vector<float> contour = {120.25f, 0.0f, 301.5f};
  save_f0_file(contour, dir + "/c.f0");
  const auto loaded = load_f0_file(dir + "/c.f0");
  REQUIRE(loaded.size() == 3);
  for (size_t i = 0; i < 3; ++i) CHECK(loaded[i] == doctest::Approx(contour[i]).epsilon(1e-4));
}

TEST_CASE("batch stream: one batch per epoch when batch size covers the corpus") {
  std::vector<SequenceItem> items(3);
  for (size_t i = 0; i < items.size(); ++i) items[i].tokens = {static_cast<int>(i) + 1};
  BatchStream stream(&items, 8, 5);
  const PaddedBatch b1 = stream.next();
  CHECK(b1.batch == 3);
  CHECK(stream.epoch() == 0);
  stream.next();
  CHECK(stream.epoch() == 1);
}

TEST_CASE("batch order is a pure function of seed and epoch") {
  std::vector<SequenceItem> items(7);
  for (size_t i = 0; i < items.size(); ++i) items[i].tokens = {static_cast<int>(i)};
  BatchStream a(&items, 2, 42);
  BatchStream b(&items, 2, 42);
  for (int i = 0; i < 10; ++i) CHECK(a.next().item_indices == b.next().item_indices);
  BatchStream c(&items, 2, 43);
  bool all_equal = true;
  BatchStream a2(&items, 2, 42);
  for (int i = 0; i < 10; ++i) all_equal &= a2.next().item_indices == c.next().item_indices;
  CHECK_FALSE(all_equal);
}

TEST_CASE("padded positions carry mask 0 and never reach a loss") {
  std::vector<SequenceItem> items(2);
  items[0].tokens = {1, 2, 3, 4};
  items[0].mel = {1, 2, 3, 4, 5, 6};
  items[0].mel_frames = 3;
  items[0].mel_bins = 2;
  items[0].log_f0 = {5.0f, 5.1f, 5.2f};
  items[0].voiced = {1, 1, 0};
  items[1].tokens = {9};
  items[1].mel = {7, 8};
  items[1].mel_frames = 1;
  items[1].mel_bins = 2;
  items[1].log_f0 = {4.9f};
  items[1].voiced = {1};

  PaddedBatch batch = make_padded_batch(items, {0, 1});
  CHECK(batch.max_tokens == 4);
  CHECK(batch.max_frames == 3);
  CHECK(batch.token_mask[static_cast<size_t>(1) * 4 + 1] == 0.0f);

  auto collect = [&](const PaddedBatch& b) {
    std::vector<float> all;
    for (int i = 0; i < b.batch; ++i) {
      const auto mel = b.mel_of(i);
      all.insert(all.end(), mel.begin(), mel.end());
      const auto f0 = b.log_f0_of(i);
      all.insert(all.end(), f0.begin(), f0.end());
      for (int t : b.tokens_of(i)) all.push_back(static_cast<float>(t));
    }
    return all;
  };
  const auto clean = collect(batch);

  // poison every padded slot; the masked views must not change
  PaddedBatch poisoned = batch;
  for (int b = 0; b < poisoned.batch; ++b) {
    for (int t = 0; t < poisoned.max_tokens; ++t)
      if (poisoned.token_mask[static_cast<size_t>(b) * poisoned.max_tokens + t] == 0.0f)
        poisoned.tokens[static_cast<size_t>(b) * poisoned.max_tokens + t] = 99999;
    for (int f = 0; f < poisoned.max_frames; ++f)
      if (poisoned.frame_mask[static_cast<size_t>(b) * poisoned.max_frames + f] == 0.0f) {
        poisoned.log_f0[static_cast<size_t>(b) * poisoned.max_frames + f] = 1e9f;
        for (int m = 0; m < poisoned.bins; ++m)
          poisoned.mel[(static_cast<size_t>(b) * poisoned.max_frames + f) * poisoned.bins + m] =
              -1e9f;
      }
  }
  CHECK(collect(poisoned) == clean);
}

TEST_CASE("checkpoint round trip is byte-exact") {
  const std::string dir = temp_dir("ckpt");
  Checkpoint ckpt;
  ckpt.stage = "t2t";
  ckpt.step = 123;
  ckpt.seed = 99;
  ckpt.config_json = R"({"model":{}})";
  ckpt.params["t2t.encoder.conv0.kernel"] = {{2, 1, 1}, {0.5f, -0.25f}, false};
  ckpt.params["t2t.embed.table"] = {{2, 2}, {1, 2, 3, 4}, true};

  save_checkpoint(ckpt, dir + "/a.ckpt");
  const Checkpoint loaded = load_checkpoint(dir + "/a.ckpt");
  CHECK(loaded.stage == "t2t");
  CHECK(loaded.step == 123);
  CHECK(loaded.seed == 99);
  CHECK(loaded.params.at("t2t.embed.table").frozen);
  CHECK(loaded.params.at("t2t.encoder.conv0.kernel").values ==
        std::vector<float>{0.5f, -0.25f});

  save_checkpoint(loaded, dir + "/b.ckpt");
  CHECK(read_bytes(dir + "/a.ckpt") == read_bytes(dir + "/b.ckpt"));
}

TEST_CASE("a corrupted checkpoint byte fails the integrity check") {
  const std::string dir = temp_dir("ckpt_bad");
  Checkpoint ckpt;
  ckpt.stage = "m2m";
  ckpt.params["m2m.encoder.conv0.kernel"] = {{4}, {1, 2, 3, 4}, false};
  save_checkpoint(ckpt, dir + "/a.ckpt");

  std::string bytes = read_bytes(dir + "/a.ckpt");
  bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 0x40);
  {
    std::ofstream out(dir + "/bad.ckpt", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS(load_checkpoint(dir + "/bad.ckpt"), ContractViolation);
}

TEST_CASE("stage-1 parameters install under their component names with freeze flags") {
  Checkpoint ckpt;
  ckpt.stage = "t2t";
  ckpt.params["t2t.encoder.conv0.kernel"] = {{2}, {1, 2}, false};
  ckpt.params["t2t.embed.table"] = {{2}, {3, 4}, false};
  ckpt.params["t2t.decoder.out.w"] = {{2}, {5, 6}, false};

  ParameterSet ps;
  install_params(ckpt, ps, /*force_frozen=*/true);
  CHECK(ps.has("t2t.encoder.conv0.kernel"));
  CHECK(ps.frozen("t2t.encoder.conv0.kernel"));
  CHECK(ps.frozen("t2t.embed.table"));
  CHECK_FALSE(ps.get("t2t.embed.table").needs_grad());
  CHECK(ps.names_with_prefix("t2t.").size() == 3);

  const uint64_t digest_before = params_digest(ps, "t2t.");
  CHECK(digest_before == params_digest(ps, "t2t."));
}

TEST_SUITE_END();
