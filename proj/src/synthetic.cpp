#include "ananet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "ananet/error.hpp"

namespace ananet::dataio {

namespace {

using Rng = std::mt19937_64;

std::vector<double> gaussian(Rng& rng, std::size_t n, double sigma) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = sigma * dist(rng);
  return v;
}

// Column-stacked basis of kLatentRank directions in R^width, scaled so a
// standard-normal latent yields unit per-coordinate variance.
struct Subspace {
  std::vector<std::vector<double>> directions;

  std::vector<double> embed(std::span<const double> latent, std::size_t width) const {
    std::vector<double> out(width, 0.0);
    for (std::size_t k = 0; k < directions.size(); ++k)
      for (std::size_t i = 0; i < width; ++i) out[i] += latent[k] * directions[k][i];
    return out;
  }
};

Subspace random_subspace(Rng& rng, std::size_t width) {
  Subspace s;
  const double sigma = 1.0 / std::sqrt(static_cast<double>(kLatentRank));
  for (std::size_t k = 0; k < kLatentRank; ++k) s.directions.push_back(gaussian(rng, width, sigma));
  return s;
}

struct World {
  std::size_t width = 0;
  std::vector<std::vector<double>> anchors;
  Subspace shared, image_private, text_private;
  std::vector<double> image_mean, text_mean;
};

float to_single(double v) { return static_cast<float>(v); }

void round_to_single(Matrix& m) {
  for (auto& v : m.values) v = static_cast<double>(to_single(v));
}

// Adds `scale * vec[i]` to row `r` of a token pair stored as glove ⊕ context.
void add_token_row(FeatureRecord& rec, std::size_t r, std::span<const double> vec,
                   double scale) {
  const std::size_t dg = rec.word_vecs.cols;
  for (std::size_t c = 0; c < dg; ++c) rec.word_vecs(r, c) += scale * vec[c];
  for (std::size_t c = 0; c < rec.ctx_vecs.cols; ++c) rec.ctx_vecs(r, c) += scale * vec[dg + c];
}

std::vector<std::size_t> pick_distinct(Rng& rng, std::size_t count, std::size_t from) {
  std::vector<std::size_t> all(from);
  std::iota(all.begin(), all.end(), 0);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(std::min(count, from));
  return all;
}

FeatureRecord make_pair(const SynthConfig& cfg, const World& world, Rng& rng, int label,
                        PlantInfo& plant) {
  FeatureRecord rec;
  rec.label = label;
  rec.region_feats = Matrix(cfg.K, cfg.d_r);
  rec.word_vecs = Matrix(cfg.N, cfg.d_G);
  rec.ctx_vecs = Matrix(cfg.N, cfg.d_B);
  const std::size_t dt = cfg.d_G + cfg.d_B;

  for (std::size_t r = 0; r < cfg.K; ++r) {
    auto noise = gaussian(rng, cfg.d_r, cfg.noise_sigma);
    for (std::size_t c = 0; c < cfg.d_r; ++c)
      rec.region_feats(r, c) = world.image_mean[c] + noise[c];
  }
  for (std::size_t r = 0; r < cfg.N; ++r) {
    auto noise = gaussian(rng, dt, cfg.noise_sigma);
    for (std::size_t c = 0; c < dt; ++c) noise[c] += world.text_mean[c];
    add_token_row(rec, r, noise, 1.0);
  }

  // Drawn for every class so the random stream advances uniformly.
  const auto z = gaussian(rng, kLatentRank, 1.0);
  const auto z_image = gaussian(rng, kLatentRank, 1.0);
  const auto z_text = gaussian(rng, kLatentRank, 1.0);

  const double a = cfg.association_strength;
  auto inject = [&](std::span<const double> image_vec, std::span<const double> text_vec) {
    for (std::size_t r = 0; r < cfg.K; ++r)
      for (std::size_t c = 0; c < cfg.d_r; ++c) rec.region_feats(r, c) += a * image_vec[c];
    for (std::size_t r = 0; r < cfg.N; ++r) add_token_row(rec, r, text_vec, a);
  };

  switch (label) {
    case kIrrelevant:
      inject(world.image_private.embed(z_image, world.width),
             world.text_private.embed(z_text, world.width));
      break;
    case kImplicitRelevant: {
      auto shared = world.shared.embed(z, world.width);
      inject(shared, shared);
      break;
    }
    default: {
      plant.region_rows = pick_distinct(rng, kAnchorsPerPair, cfg.K);
      plant.token_rows = pick_distinct(rng, kAnchorsPerPair, cfg.N);
      const std::size_t pairs = std::min(plant.region_rows.size(), plant.token_rows.size());
      plant.region_rows.resize(pairs);
      plant.token_rows.resize(pairs);
      plant.anchor_ids = pick_distinct(rng, pairs, world.anchors.size());
      const double s = cfg.alignment_strength;
      for (std::size_t k = 0; k < pairs; ++k) {
        const auto& anchor = world.anchors[plant.anchor_ids[k]];
        for (std::size_t c = 0; c < cfg.d_r; ++c)
          rec.region_feats(plant.region_rows[k], c) += s * anchor[c];
        add_token_row(rec, plant.token_rows[k], anchor, s);
      }
      break;
    }
  }
  round_to_single(rec.region_feats);
  round_to_single(rec.word_vecs);
  round_to_single(rec.ctx_vecs);
  return rec;
}

}  // namespace

void SynthConfig::validate() const {
  for (const auto& split : n_per_class)
    for (auto n : split)
      if (n == 0) throw ConfigError("synthetic per-class counts must be >= 1");
  if (K == 0 || N == 0 || d_r == 0 || d_G == 0 || d_B == 0) {
    throw ConfigError("synthetic K, N, d_r, d_G, d_B must be >= 1");
  }
  if (!(alignment_strength > 0.0) || !(association_strength > 0.0)) {
    throw ConfigError("synthetic alignment/association strengths must be > 0");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ConfigError("synthetic noise_sigma must be >= 0");
  }
}

void SynthConfig::set_balanced(std::size_t train, std::size_t dev, std::size_t test) {
  n_per_class = {{{train, train, train}, {dev, dev, dev}, {test, test, test}}};
}

SyntheticDataset synthesize(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  World world;
  world.width = std::max(cfg.d_r, cfg.d_G + cfg.d_B);
  for (std::size_t k = 0; k < kAnchorBankSize; ++k)
    world.anchors.push_back(gaussian(rng, world.width, 1.0));
  world.shared = random_subspace(rng, world.width);
  world.image_private = random_subspace(rng, world.width);
  world.text_private = random_subspace(rng, world.width);
  world.image_mean = gaussian(rng, cfg.d_r, 0.5);
  world.text_mean = gaussian(rng, cfg.d_G + cfg.d_B, 0.5);

  SyntheticDataset data;
  for (std::size_t s = 0; s < 3; ++s) {
    std::vector<int> labels;
    for (int c = 0; c < kNumClasses; ++c)
      labels.insert(labels.end(), cfg.n_per_class[s][static_cast<std::size_t>(c)], c);
    std::shuffle(labels.begin(), labels.end(), rng);

    auto& split = data.splits[s];
    for (std::size_t i = 0; i < labels.size(); ++i) {
      PlantInfo plant;
      auto rec = make_pair(cfg, world, rng, labels[i], plant);
      char id[64];
      std::snprintf(id, sizeof(id), "%s_%06zu", kSplitNames[s], i);
      rec.id = id;
      split.records.push_back(std::move(rec));
      split.plants.push_back(std::move(plant));
    }
  }
  return data;
}

SynthManifests generate_synthetic(const SynthConfig& cfg,
                                  const std::filesystem::path& out_dir) {
  const auto data = synthesize(cfg);
  std::array<std::filesystem::path, 3> paths;
  for (std::size_t s = 0; s < 3; ++s) {
    DatasetManifest manifest;
    manifest.split = kSplitNames[s];
    for (const auto& rec : data.splits[s].records)
      manifest.entries.push_back(write_record(out_dir, manifest.split, rec));
    paths[s] = manifest_path(out_dir, manifest.split);
    write_manifest(paths[s], manifest);
  }
  return {paths[0], paths[1], paths[2]};
}

}  // namespace ananet::dataio
