/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 dwinr contributors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "dwinr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace dwinr::train {

namespace {

std::vector<double> input_angles(const TrainSample& sample) {
  std::vector<double> angles;
  for (const auto& tx : sample.input.sequence().transmits) angles.push_back(tx.steering_angle);
  return angles;
}

// Row r of an angle-major stack of masked pixels maps to image pixel masked[r % P].
std::vector<std::size_t> stacked_index(const std::vector<std::size_t>& masked, std::size_t copies) {
  std::vector<std::size_t> index;
  index.reserve(masked.size() * copies);
  for (std::size_t k = 0; k < copies; ++k) index.insert(index.end(), masked.begin(), masked.end());
  return index;
}

std::vector<double> stacked_samples(const TrainSample& sample, DelayCache& cache) {
  std::vector<double> out;
  const auto& seq = sample.input.sequence();
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const auto& table = cache.get(sample.input.geometry(), seq.transmits[k], sample.input.num_samples());
    const auto s = table.apply(sample.input, k);
    const auto* raw = reinterpret_cast<const double*>(s.data());
    out.insert(out.end(), raw, raw + 2 * s.size());
  }
  return out;
}

struct GroupRecord {
  inr::RecordedNetwork net;
  std::vector<ad::Var> losses;
  std::vector<ad::Var> predictions;
};

// Records one network evaluation for the shared angles and the loss of every sample in the group.
GroupRecord record_group(ad::Tape& tape, const inr::InrParams& params, std::span<const TrainSample* const> group,
                         DelayCache& cache, const TrainConfig& cfg) {
  const PixelGrid& grid = cache.grid();
  const auto masked = grid.masked_pixels();
  const auto angles = input_angles(*group.front());
  const std::size_t rows = angles.size() * masked.size();
  const std::size_t channels = params.arch.outputs;

  GroupRecord rec;
  auto emb = tape.constant(inr::embed_grid(params.encoding, grid, angles), {rows, params.arch.input_features}, true);
  rec.net = inr::record_forward(tape, params, emb);
  const auto index = stacked_index(masked, angles.size());
  for (const TrainSample* sample : group) {
    if (sample->input.num_channels() != channels)
      throw std::invalid_argument("training: sample channel count does not match the network output");
    auto s = tape.constant(stacked_samples(*sample, cache), {rows, channels}, true);
    auto y = ad::apodized_sum(rec.net.output, s);
    auto image = ad::scatter_add(y, index, {grid.height, grid.width});
    auto pred = record_bmode(image, sample->gt_norm, cfg.dynamic_range);
    rec.predictions.push_back(pred);
    rec.losses.push_back(record_loss(pred, sample->ground_truth, grid.sector_mask, cfg.beta, cfg.ssim));
  }
  return rec;
}

BModeImage to_bmode(const ad::Var& v, std::size_t width, std::size_t height, double dr) {
  BModeImage img(width, height, dr);
  const auto values = v.value();
  std::copy(values.begin(), values.end(), img.values.begin());
  return img;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("train config: beta must be in [0, 1]");
  if (batch_size < 1) throw std::invalid_argument("train config: batch size must be >= 1");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("train config: learning rate must be >= 0");
  if (!(dynamic_range > 0.0)) throw std::invalid_argument("train config: dynamic range must be positive");
  for (double r : split) {
    if (!(r >= 0.0)) throw std::invalid_argument("train config: split ratios must be >= 0");
  }
  if (std::abs(split[0] + split[1] + split[2] - 1.0) > 1e-9)
    throw std::invalid_argument("train config: split ratios must sum to 1");
  if (input_transmits < 1) throw std::invalid_argument("train config: need at least one input transmit");
  if (embedding_length < 1) throw std::invalid_argument("train config: embedding length must be >= 1");
}

TrainSample make_sample(const IQFrame& full, const PixelGrid& grid, const TrainConfig& cfg, unsigned threads) {
  std::vector<std::size_t> all(full.num_transmits());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const ComplexImage reference = das::rectangular_compound(full, all, grid, threads);
  TrainSample sample;
  sample.gt_norm = das::envelope_max(reference);
  sample.ground_truth = das::bmode(reference, cfg.dynamic_range, sample.gt_norm);
  sample.source_indices = spread_indices(full.num_transmits(), cfg.input_transmits);
  sample.input = full.select_transmits(sample.source_indices);
  return sample;
}

std::array<std::size_t, 3> split_counts(std::size_t total, const std::array<double, 3>& ratios) {
  const auto train = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(total)));
  const auto val = std::min(total - std::min(total, train),
                            static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(total))));
  const std::size_t t = std::min(total, train);
  return {t, val, total - t - val};
}

SplitDataset make_dataset(std::span<const IQFrame> frames, const PixelGrid& grid, const TrainConfig& cfg,
                          unsigned threads) {
  cfg.validate();
  SplitDataset data;
  data.grid = grid;
  if (!frames.empty()) data.sequence = frames.front().sequence();
  const auto counts = split_counts(frames.size(), cfg.split);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    auto sample = make_sample(frames[i], grid, cfg, threads);
    if (i < counts[0]) data.train.push_back(std::move(sample));
    else if (i < counts[0] + counts[1]) data.val.push_back(std::move(sample));
    else data.test.push_back(std::move(sample));
  }
  return data;
}

const das::DelayTable& DelayCache::get(const ArrayGeometry& geom, const TransmitEvent& tx, std::size_t num_samples) {
  const std::array<double, 3> key{tx.steering_angle, tx.virtual_source_distance, static_cast<double>(num_samples)};
  auto it = tables_.find(key);
  if (it == tables_.end()) {
    it = tables_.emplace(key, std::make_unique<das::DelayTable>(geom, tx, grid_, num_samples)).first;
  }
  return *it->second;
}

ad::Var record_bmode(ad::Var image, double norm_max, double dynamic_range) {
  ad::Tape& tape = *image.tape();
  auto env = ad::abs(image);
  if (!(norm_max > 0.0)) return tape.constant(std::vector<double>(env.shape().size(), 0.0), env.shape());
  auto db = ad::scale(ad::log10(ad::add_scalar(ad::div_scalar(env, norm_max), das::kLogEpsilon)), 20.0);
  auto clipped = ad::clip(db, -dynamic_range, 0.0);
  return ad::div_scalar(ad::add_scalar(clipped, dynamic_range), dynamic_range);
}

ad::Var record_loss(ad::Var pred, const BModeImage& gt, std::span<const std::uint8_t> mask, double beta,
                    const metrics::SsimOptions& ssim) {
  ad::Tape& tape = *pred.tape();
  const ad::Shape shape{gt.height, gt.width};
  if (!(pred.shape() == shape)) throw std::invalid_argument("record_loss: prediction and reference shapes differ");
  auto ref = tape.constant(gt.values, shape);

  std::vector<std::uint8_t> all;
  if (mask.empty()) {
    all.assign(shape.size(), 1);
    mask = all;
  }
  auto mse = ad::masked_mean(ad::square(pred - ref), mask);

  // Mirrors metrics::ssim term by term.
  const auto taps = metrics::gaussian_taps(ssim.window, ssim.sigma);
  auto mu_a = ad::gaussian_filter(pred, taps);
  auto mu_b = ad::gaussian_filter(ref, taps);
  auto e_aa = ad::gaussian_filter(pred * pred, taps);
  auto e_bb = ad::gaussian_filter(ref * ref, taps);
  auto e_ab = ad::gaussian_filter(pred * ref, taps);
  auto var_a = e_aa - mu_a * mu_a;
  auto var_b = e_bb - mu_b * mu_b;
  auto cov = e_ab - mu_a * mu_b;
  auto num = ad::add_scalar(ad::scale(mu_a, 2.0) * mu_b, ssim.c1()) * ad::add_scalar(ad::scale(cov, 2.0), ssim.c2());
  auto den = ad::add_scalar(mu_a * mu_a + mu_b * mu_b, ssim.c1()) * ad::add_scalar(var_a + var_b, ssim.c2());
  auto s = ad::mean(num / den);

  return ad::scale(mse, beta) + ad::scale(ad::add_scalar(-s, 1.0), 1.0 - beta);
}

SampleForward forward_sample(const inr::InrParams& params, const TrainSample& sample, const PixelGrid& grid,
                             const TrainConfig& cfg) {
  DelayCache cache(grid);
  SampleForward out;
  out.tape = std::make_unique<ad::Tape>();
  const TrainSample* ptr = &sample;
  auto rec = record_group(*out.tape, params, std::span<const TrainSample* const>(&ptr, 1), cache, cfg);
  out.params = rec.net.tensors;
  out.loss = rec.losses.front();
  out.loss_value = out.loss.scalar();
  out.prediction = to_bmode(rec.predictions.front(), grid.width, grid.height, cfg.dynamic_range);
  return out;
}

BatchGradient batch_gradient(const inr::InrParams& params, std::span<const TrainSample* const> batch,
                             DelayCache& cache, const TrainConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("batch_gradient: empty batch");
  // Group by input angles, keeping first-appearance order.
  std::vector<std::vector<const TrainSample*>> groups;
  std::vector<std::vector<double>> keys;
  std::vector<std::size_t> position;  // batch index -> (group, slot), flattened later
  for (const TrainSample* s : batch) {
    const auto key = input_angles(*s);
    auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) {
      keys.push_back(key);
      groups.push_back({s});
    } else {
      groups[static_cast<std::size_t>(it - keys.begin())].push_back(s);
    }
  }

  ad::Tape tape;
  std::vector<GroupRecord> records;
  for (const auto& g : groups) records.push_back(record_group(tape, params, g, cache, cfg));

  std::vector<ad::Var> losses;
  for (const auto& r : records) losses.insert(losses.end(), r.losses.begin(), r.losses.end());
  ad::Var total = losses.front();
  for (std::size_t i = 1; i < losses.size(); ++i) total = total + losses[i];
  ad::Var mean = ad::div_scalar(total, static_cast<double>(losses.size()));
  tape.backward(mean);

  BatchGradient out;
  out.loss = mean.scalar();
  for (const auto& l : losses) out.sample_losses.push_back(l.scalar());
  const auto tensors = params.tensors();
  out.grads.resize(tensors.size());
  for (std::size_t t = 0; t < tensors.size(); ++t) out.grads[t].assign(tensors[t].size(), 0.0);
  for (const auto& r : records) {
    for (std::size_t t = 0; t < tensors.size(); ++t) {
      const auto g = r.net.tensors[t].grad();
      for (std::size_t i = 0; i < g.size(); ++i) out.grads[t][i] += g[i];
    }
  }
  return out;
}

void adam_step(std::span<const std::span<double>> params, std::span<const std::vector<double>> grads,
               AdamState& state, std::uint64_t t, const AdamOptions& opt) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: parameter/gradient count mismatch");
  if (t < 1) throw std::invalid_argument("adam_step: step count is 1-based");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != grads[k].size()) throw std::invalid_argument("adam_step: tensor shape mismatch");
    for (std::size_t i = 0; i < grads[k].size(); ++i) {
      if (!std::isfinite(grads[k][i])) {
        std::ostringstream msg;
        msg << "adam_step: non-finite gradient " << grads[k][i] << " in tensor " << k << " element " << i
            << " at step " << t;
        throw TrainingError(msg.str());
      }
    }
  }
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), {});
    state.v.assign(params.size(), {});
    for (std::size_t k = 0; k < params.size(); ++k) {
      state.m[k].assign(params[k].size(), 0.0);
      state.v[k].assign(params[k].size(), 0.0);
    }
  }
  const double td = static_cast<double>(t);
  const double c1 = 1.0 - std::pow(opt.beta1, td);
  const double c2 = 1.0 - std::pow(opt.beta2, td);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.m[k];
    auto& v = state.v[k];
    const auto& g = grads[k];
    auto p = params[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
      v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= opt.learning_rate * m_hat / (std::sqrt(v_hat) + opt.epsilon);
    }
  }
}

ComplexImage predict_compound(const TrainSample& sample, std::span<const das::ApodizationMap> apod,
                              DelayCache& cache) {
  const auto& seq = sample.input.sequence();
  if (apod.size() != seq.size()) throw std::invalid_argument("predict_compound: need one map per input transmit");
  const PixelGrid& grid = cache.grid();
  const auto masked = grid.masked_pixels();
  const std::size_t channels = sample.input.num_channels();
  std::vector<ComplexImage> images;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    if (apod[k].channels != channels || apod[k].width != grid.width || apod[k].height != grid.height)
      throw std::invalid_argument("predict_compound: apodization map shape mismatch");
    const auto& table = cache.get(sample.input.geometry(), seq.transmits[k], sample.input.num_samples());
    const auto s = table.apply(sample.input, k);
    ComplexImage img(grid.width, grid.height);
    for (std::size_t i = 0; i < masked.size(); ++i) {
      const auto w = apod[k].pixel(masked[i]);
      cdouble acc{0.0, 0.0};
      for (std::size_t n = 0; n < channels; ++n) acc += w[n] * s[i * channels + n];
      img.pixels[masked[i]] = acc;
    }
    images.push_back(std::move(img));
  }
  return das::compound(images);
}

namespace {

// Apodization maps for each distinct input-angle set, computed once per call.
class MapCache {
 public:
  MapCache(const inr::InrParams& params, const PixelGrid& grid) : params_(params), grid_(grid) {}

  const std::vector<das::ApodizationMap>& get(const TrainSample& sample) {
    const auto key = input_angles(sample);
    auto it = maps_.find(key);
    if (it == maps_.end()) {
      std::vector<das::ApodizationMap> maps;
      for (double a : key) maps.push_back(inr::predict_apodization_map(params_, grid_, a));
      it = maps_.emplace(key, std::move(maps)).first;
    }
    return it->second;
  }

 private:
  const inr::InrParams& params_;
  const PixelGrid& grid_;
  std::map<std::vector<double>, std::vector<das::ApodizationMap>> maps_;
};

}  // namespace

double mean_loss(const inr::InrParams& params, std::span<const TrainSample> samples, DelayCache& cache,
                 const TrainConfig& cfg) {
  if (samples.empty()) throw std::invalid_argument("mean_loss: no samples");
  MapCache maps(params, cache.grid());
  double total = 0.0;
  for (const auto& s : samples) {
    const auto image = predict_compound(s, maps.get(s), cache);
    const auto pred = das::bmode(image, cfg.dynamic_range, s.gt_norm);
    total += metrics::loss(pred, s.ground_truth, cfg.beta, cache.grid().sector_mask, cfg.ssim);
  }
  return total / static_cast<double>(samples.size());
}

FitResult fit(const SplitDataset& data, const TrainConfig& cfg, std::optional<inr::InrParams> initial,
              const EpochCallback& on_epoch) {
  cfg.validate();
  if (data.train.empty()) throw std::invalid_argument("fit: empty training split");

  inr::InrParams params;
  if (initial) {
    params = std::move(*initial);
  } else {
    inr::Architecture arch = cfg.arch;
    arch.input_features = 3 * cfg.embedding_length;
    arch.outputs = data.train.front().input.num_channels();
    params = inr::init_params(cfg.seed, arch, inr::EncodingConfig::from(data.grid, data.sequence, cfg.embedding_length));
  }
  params.validate();

  DelayCache cache(data.grid);
  const AdamOptions opt = AdamOptions::from(cfg);
  AdamState state;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  FitResult result;
  result.best = params;
  double best_loss = std::numeric_limits<double>::infinity();
  std::uint64_t t = params.step;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      std::vector<const TrainSample*> batch;
      for (std::size_t i = b; i < std::min(order.size(), b + cfg.batch_size); ++i) batch.push_back(&data.train[order[i]]);
      const BatchGradient bg = batch_gradient(params, batch, cache, cfg);
      if (!std::isfinite(bg.loss)) {
        result.status = FitStatus::Diverged;
        result.message = "non-finite training loss at epoch " + std::to_string(epoch);
        result.last = params;
        return result;
      }
      try {
        adam_step(params.tensors(), bg.grads, state, ++t, opt);
      } catch (const TrainingError& e) {
        result.status = FitStatus::Diverged;
        result.message = e.what();
        result.last = params;
        return result;
      }
      params.step = t;
      for (double l : bg.sample_losses) loss_sum += l;
      loss_count += bg.sample_losses.size();
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(loss_count);
    stats.val_loss = data.val.empty() ? stats.train_loss : mean_loss(params, data.val, cache, cfg);
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.curve.push_back(stats);
    if (!std::isfinite(stats.val_loss)) {
      result.status = FitStatus::Diverged;
      result.message = "non-finite validation loss at epoch " + std::to_string(epoch);
      result.last = params;
      return result;
    }
    if (stats.val_loss < best_loss) {
      best_loss = stats.val_loss;
      result.best = params;
      result.best_epoch = epoch;
    }
    if (on_epoch) on_epoch(stats);
  }
  result.last = params;
  if (cfg.epochs == 0) result.best = params;
  return result;
}

MetricsReport evaluate(const inr::InrParams& params, std::span<const TrainSample> samples, DelayCache& cache,
                       const TrainConfig& cfg) {
  MetricsReport report;
  MapCache maps(params, cache.grid());
  const auto& mask = cache.grid().sector_mask;
  for (const auto& s : samples) {
    std::vector<das::ApodizationMap> ones(s.input.num_transmits(),
                                          das::ApodizationMap::ones(cache.grid(), s.input.num_channels()));
    const auto pred = das::bmode(predict_compound(s, maps.get(s), cache), cfg.dynamic_range, s.gt_norm);
    const auto base = das::bmode(predict_compound(s, ones, cache), cfg.dynamic_range, s.gt_norm);
    FrameMetrics fm;
    fm.psnr_inr = metrics::psnr(pred, s.ground_truth, mask);
    fm.ssim_inr = metrics::ssim(pred, s.ground_truth, cfg.ssim);
    fm.psnr_baseline = metrics::psnr(base, s.ground_truth, mask);
    fm.ssim_baseline = metrics::ssim(base, s.ground_truth, cfg.ssim);
    report.frames.push_back(fm);
  }
  auto column = [&](auto member) {
    std::vector<double> v;
    for (const auto& f : report.frames) v.push_back(f.*member);
    return metrics::summarize(v);
  };
  report.psnr_inr = column(&FrameMetrics::psnr_inr);
  report.ssim_inr = column(&FrameMetrics::ssim_inr);
  report.psnr_baseline = column(&FrameMetrics::psnr_baseline);
  report.ssim_baseline = column(&FrameMetrics::ssim_baseline);
  return report;
}

}  // namespace dwinr::train
