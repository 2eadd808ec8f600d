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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dwinr/autodiff.hpp"
#include "dwinr/beamformer.hpp"
#include "dwinr/core.hpp"
#include "dwinr/inr.hpp"
#include "dwinr/metrics.hpp"

namespace dwinr::train {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double beta{0.5};
  double learning_rate{1e-4};
  std::size_t batch_size{4};
  std::size_t epochs{100};
  double adam_beta1{0.9};
  double adam_beta2{0.999};
  double adam_epsilon{1e-8};
  std::uint64_t seed{0};
  double dynamic_range{60.0};
  std::array<double, 3> split{0.6, 0.2, 0.2};
  std::size_t input_transmits{3};
  metrics::SsimOptions ssim;
  inr::Architecture arch;
  std::size_t embedding_length{10};

  void validate() const;
};

/**
 * One supervised example: the selected low-transmit input (only those transmits are
 * kept) and the rectangular-apodization reference compounded over all transmits.
 */
struct TrainSample {
  IQFrame input;
  std::vector<std::size_t> source_indices;  // positions of the input transmits in the full sequence
  BModeImage ground_truth;
  double gt_norm{0.0};  // envelope maximum of the reference compound
};

/// Builds a sample from a full acquisition: reference over all transmits, input = spread subset.
TrainSample make_sample(const IQFrame& full, const PixelGrid& grid, const TrainConfig& cfg, unsigned threads = 1);

struct SplitDataset {
  PixelGrid grid;
  Sequence sequence;  // full sequence of the source acquisitions
  std::vector<TrainSample> train;
  std::vector<TrainSample> val;
  std::vector<TrainSample> test;
};

/// Splits consecutive frames by cfg.split (rounded counts; test takes the remainder).
std::array<std::size_t, 3> split_counts(std::size_t total, const std::array<double, 3>& ratios);

SplitDataset make_dataset(std::span<const IQFrame> frames, const PixelGrid& grid, const TrainConfig& cfg,
                          unsigned threads = 1);

/// Delay tables keyed by transmit, shared by every sample acquired with the same sequence.
class DelayCache {
 public:
  explicit DelayCache(PixelGrid grid) : grid_(std::move(grid)) {}
  const das::DelayTable& get(const ArrayGeometry& geom, const TransmitEvent& tx, std::size_t num_samples);
  const PixelGrid& grid() const { return grid_; }

 private:
  PixelGrid grid_;
  std::map<std::array<double, 3>, std::unique_ptr<das::DelayTable>> tables_;
};

/// Recorded B-mode conversion of a complex image node with a fixed normalization.
ad::Var record_bmode(ad::Var image, double norm_max, double dynamic_range);

/// Recorded beta * MSE(mask) + (1 - beta) * (1 - SSIM) against a constant reference.
ad::Var record_loss(ad::Var pred, const BModeImage& gt, std::span<const std::uint8_t> mask, double beta,
                    const metrics::SsimOptions& ssim);

struct SampleForward {
  std::unique_ptr<ad::Tape> tape;
  std::vector<ad::Var> params;  // leaves in InrParams::tensors() order
  ad::Var loss;
  BModeImage prediction;
  double loss_value{0.0};
};

/// Apodization at each input angle -> DAS -> compound -> B-mode (reference norm) -> loss, on a fresh tape.
SampleForward forward_sample(const inr::InrParams& params, const TrainSample& sample, const PixelGrid& grid,
                             const TrainConfig& cfg);

struct BatchGradient {
  double loss{0.0};                          // mean over the batch
  std::vector<double> sample_losses;
  std::vector<std::vector<double>> grads;    // per tensor, InrParams::tensors() order
};

/// Gradient of the batch-mean loss. Samples sharing input angles share one network evaluation.
BatchGradient batch_gradient(const inr::InrParams& params, std::span<const TrainSample* const> batch,
                             DelayCache& cache, const TrainConfig& cfg);

struct AdamOptions {
  double learning_rate{1e-4};
  double beta1{0.9};
  double beta2{0.999};
  double epsilon{1e-8};

  static AdamOptions from(const TrainConfig& cfg) {
    return {cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon};
  }
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

/**
 * One bias-corrected Adam update at step t (1-based). State is sized on first use.
 * Throws TrainingError on a non-finite gradient, before touching any parameter.
 */
void adam_step(std::span<const std::span<double>> params, std::span<const std::vector<double>> grads,
               AdamState& state, std::uint64_t t, const AdamOptions& opt);

struct EpochStats {
  std::size_t epoch{0};
  double train_loss{0.0};
  double val_loss{0.0};
  double seconds{0.0};
};

enum class FitStatus { Completed, Diverged };

struct FitResult {
  inr::InrParams best;   // lowest validation loss (training loss when there is no validation split)
  inr::InrParams last;   // parameters after the final completed step
  std::vector<EpochStats> curve;
  std::size_t best_epoch{0};
  FitStatus status{FitStatus::Completed};
  std::string message;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Mean plain-evaluation loss over the samples.
double mean_loss(const inr::InrParams& params, std::span<const TrainSample> samples, DelayCache& cache,
                 const TrainConfig& cfg);

FitResult fit(const SplitDataset& data, const TrainConfig& cfg, std::optional<inr::InrParams> initial = std::nullopt,
              const EpochCallback& on_epoch = {});

struct FrameMetrics {
  double psnr_inr{0.0};
  double ssim_inr{0.0};
  double psnr_baseline{0.0};
  double ssim_baseline{0.0};
};

struct MetricsReport {
  std::vector<FrameMetrics> frames;
  metrics::Summary psnr_inr, ssim_inr, psnr_baseline, ssim_baseline;
};

/// INR-apodized and rectangular reconstructions of each sample versus its reference.
MetricsReport evaluate(const inr::InrParams& params, std::span<const TrainSample> samples, DelayCache& cache,
                       const TrainConfig& cfg);

/// Compound of the sample's input transmits with the given per-transmit weights (plain path).
ComplexImage predict_compound(const TrainSample& sample, std::span<const das::ApodizationMap> apod,
                              DelayCache& cache);

}  // namespace dwinr::train
