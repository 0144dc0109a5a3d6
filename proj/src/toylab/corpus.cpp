#include <array>
#include <cmath>
#include <cstring>

#include "tvgrl/errors.hpp"
#include "tvgrl/toylab.hpp"
#include "tvgrl/verbtext.hpp"

namespace tvgrl::toylab {

const std::vector<std::string>& toy_verbs() {
  static const std::vector<std::string> verbs = {
      "open", "close", "walk", "laugh", "jump", "wash", "cook", "climb",
      "push", "pull", "clean", "kick", "paint", "smile", "dance", "talk"};
  return verbs;
}

const std::vector<std::string>& toy_objects() {
  static const std::vector<std::string> objects = {
      "door", "window", "table", "floor", "cup", "blanket", "sandwich", "pillow",
      "shelf", "mirror", "laptop", "towel", "chair", "book", "bag", "closet"};
  return objects;
}

void SyntheticCorpusConfig::validate() const {
  if (n_videos == 0) throw ArgumentError("n_videos must be positive");
  if (timesteps == 0) throw ArgumentError("timesteps must be positive");
  if (n_actions < 2) throw ArgumentError("n_actions must be at least 2");
  if (n_actions > toy_verbs().size()) {
    throw ArgumentError("n_actions exceeds the toy verb list (" +
                        std::to_string(toy_verbs().size()) + ")");
  }
  if (feature_dim == 0) throw ArgumentError("feature_dim must be positive");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ArgumentError("noise_sigma must be finite and non-negative");
  }
  if (span_min == 0 || span_min > span_max) throw ArgumentError("invalid span length range");
  if (span_max > timesteps) throw ArgumentError("span max exceeds timesteps");
}

Annotation SyntheticVideo::annotation() const {
  Annotation a;
  a.id = id;
  a.video_ref = id;
  a.duration_s = static_cast<double>(timesteps);
  a.segment = gt_span;
  a.query = query;
  return a;
}

SyntheticCorpus gen_synthetic_corpus(const SyntheticCorpusConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const auto d = config.feature_dim;

  SyntheticCorpus corpus;
  corpus.config = config;
  corpus.action_embeddings.resize(config.n_actions * d);
  for (auto& v : corpus.action_embeddings) v = rng.normal();
  corpus.motion.resize(d);
  for (auto& v : corpus.motion) v = rng.normal();

  constexpr std::array<verbtext::Inflection, 3> kForms = {
      verbtext::Inflection::ThirdPerson, verbtext::Inflection::Past,
      verbtext::Inflection::Progressive};

  corpus.videos.reserve(config.n_videos);
  for (std::size_t k = 0; k < config.n_videos; ++k) {
    SyntheticVideo v;
    v.id = "toy-" + std::to_string(k);
    v.timesteps = config.timesteps;
    v.feature_dim = d;
    v.action_id = rng.index(config.n_actions);
    v.distractor_id = rng.index(config.n_actions - 1);
    if (v.distractor_id >= v.action_id) ++v.distractor_id;

    const auto len = config.span_min + rng.index(config.span_max - config.span_min + 1);
    const auto start = rng.index(config.timesteps - len + 1);
    v.gt_span = {static_cast<double>(start), static_cast<double>(start + len)};

    const auto& lemma = toy_verbs()[v.action_id];
    const auto surface = verbtext::inflect(VerbLemma{lemma}, kForms[rng.index(kForms.size())]);
    const auto& object = toy_objects()[rng.index(toy_objects().size())];
    v.query = "a person " + surface + " " + object;

    v.features.resize(config.timesteps * d);
    for (std::size_t t = 0; t < config.timesteps; ++t) {
      const bool inside = t >= start && t < start + len;
      const auto action = inside ? v.action_id : v.distractor_id;
      for (std::size_t i = 0; i < d; ++i) {
        double x = corpus.action_embeddings[action * d + i];
        if (inside) x += corpus.motion[i];
        if (config.noise_sigma > 0.0) x += config.noise_sigma * rng.normal();
        v.features[t * d + i] = x;
      }
    }
    corpus.videos.push_back(std::move(v));
  }
  return corpus;
}

std::pair<SyntheticCorpus, SyntheticCorpus> split_corpus(const SyntheticCorpus& corpus,
                                                         std::size_t n_heldout) {
  if (n_heldout >= corpus.videos.size()) {
    throw ArgumentError("held-out split leaves no training videos");
  }
  SyntheticCorpus train = corpus;
  SyntheticCorpus heldout = corpus;
  const auto cut = corpus.videos.size() - n_heldout;
  train.videos.assign(corpus.videos.begin(), corpus.videos.begin() + cut);
  heldout.videos.assign(corpus.videos.begin() + cut, corpus.videos.end());
  return {std::move(train), std::move(heldout)};
}

namespace {

struct Fnv {
  std::uint64_t h = 1469598103934665603ULL;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 1099511628211ULL;
    }
  }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void real(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
  }
  void text(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
};

}  // namespace

std::uint64_t corpus_hash(const SyntheticCorpus& corpus) {
  Fnv f;
  for (double v : corpus.action_embeddings) f.real(v);
  for (double v : corpus.motion) f.real(v);
  for (const auto& v : corpus.videos) {
    f.text(v.id);
    f.u64(v.timesteps);
    f.u64(v.feature_dim);
    f.u64(v.action_id);
    f.u64(v.distractor_id);
    f.real(v.gt_span.start_s);
    f.real(v.gt_span.end_s);
    f.text(v.query);
    for (double x : v.features) f.real(x);
  }
  return f.h;
}

}  // namespace tvgrl::toylab
