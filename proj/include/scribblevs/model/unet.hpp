#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scribblevs/common.hpp"
#include "scribblevs/model/layers.hpp"
#include "scribblevs/model/param_store.hpp"
#include "scribblevs/model/tensor.hpp"
#include "scribblevs/rng.hpp"

namespace scribblevs {

struct UNetConfig {
  int in_channels = 1;
  int num_classes = 2;
  int base_width = 16;
  int depth = 4;

  void validate() const {
    if (in_channels < 1) throw ConfigError("UNetConfig: in_channels must be >= 1");
    if (num_classes < 2) throw ConfigError("UNetConfig: num_classes must be >= 2");
    if (base_width < 1) throw ConfigError("UNetConfig: base_width must be >= 1");
    if (depth < 2) throw ConfigError("UNetConfig: depth must be >= 2");
  }

  int width_at(int level) const { return base_width << level; }
  int downsample_factor() const { return 1 << (depth - 1); }
};

/// Conv3x3 -> GroupNorm -> ReLU, twice.
template <typename T>
struct ConvBlock {
  Conv3x3<T> conv1, conv2;
  GroupNorm<T> gn1, gn2;

  ConvBlock() = default;
  ConvBlock(ParamStore<T>& ps, int in, int out)
      : conv1(ps, in, out), conv2(ps, out, out), gn1(ps, out), gn2(ps, out) {}

  void init(ParamStore<T>& ps, Rng& rng) const {
    conv1.init_he(ps, rng);
    gn1.init(ps);
    conv2.init_he(ps, rng);
    gn2.init(ps);
  }
};

template <typename T>
struct ConvBlockCache {
  Tensor3<T> x;   // block input
  Tensor3<T> z1;  // conv1 output (group-norm input)
  Tensor3<T> r1;  // first activation (conv2 input)
  Tensor3<T> z2;  // conv2 output
  Tensor3<T> r2;  // block output
  GroupNormStats<T> stats1, stats2;
};

template <typename T>
void conv_block_forward(const ConvBlock<T>& blk, const ParamStore<T>& ps, const Tensor3<T>& x,
                        ConvBlockCache<T>& cache, ConvScratch<T>& scratch) {
  cache.x = x;
  Tensor3<T> g;
  blk.conv1.forward(ps, cache.x, cache.z1, scratch);
  blk.gn1.forward(ps, cache.z1, g, &cache.stats1);
  relu_forward(g, cache.r1);
  blk.conv2.forward(ps, cache.r1, cache.z2, scratch);
  blk.gn2.forward(ps, cache.z2, g, &cache.stats2);
  relu_forward(g, cache.r2);
}

/// Accumulates parameter gradients; writes d(input) when dx != nullptr.
template <typename T>
void conv_block_backward(const ConvBlock<T>& blk, ParamStore<T>& ps, const Tensor3<T>& dout,
                         Tensor3<T>* dx, const ConvBlockCache<T>& cache, ConvScratch<T>& scratch) {
  Tensor3<T> dg, dz, dr;
  relu_backward(cache.r2, dout, dg);
  blk.gn2.backward(ps, cache.z2, dg, dz, cache.stats2);
  blk.conv2.backward(ps, cache.r1, dz, &dr, scratch);
  relu_backward(cache.r1, dr, dg);
  blk.gn1.backward(ps, cache.z1, dg, dz, cache.stats1);
  blk.conv1.backward(ps, cache.x, dz, dx, scratch);
}

template <typename T>
struct UNetCache {
  std::vector<ConvBlockCache<T>> enc;
  std::vector<MaxPoolIndices> pools;
  std::vector<ConvBlockCache<T>> dec;
};

/// Encoder-decoder segmentation network: ConvBlocks joined by 2x max pooling
/// on the way down and nearest upsampling plus skip concatenation on the way
/// up, with a 1x1 projection to class scores. Layer topology lives here;
/// parameter values live in an external ParamStore so one topology can drive
/// several weight sets.
template <typename T>
struct UNet {
  UNetConfig cfg;
  std::vector<ConvBlock<T>> enc_blocks;  // depth entries, shallow to deep
  std::vector<ConvBlock<T>> dec_blocks;  // depth-1 entries, deep to shallow
  Conv1x1<T> head;

  UNet() = default;

  /// Reserves parameter segments in ps (construction order fixes the layout).
  UNet(const UNetConfig& config, ParamStore<T>& ps) : cfg(config) {
    cfg.validate();
    int in = cfg.in_channels;
    for (int level = 0; level < cfg.depth; ++level) {
      enc_blocks.emplace_back(ps, in, cfg.width_at(level));
      in = cfg.width_at(level);
    }
    for (int level = cfg.depth - 2; level >= 0; --level) {
      dec_blocks.emplace_back(ps, cfg.width_at(level + 1) + cfg.width_at(level), cfg.width_at(level));
    }
    head = Conv1x1<T>(ps, cfg.base_width, cfg.num_classes);
  }

  void init(ParamStore<T>& ps, uint64_t seed) const {
    Rng rng(seed);
    for (const auto& blk : enc_blocks) blk.init(ps, rng);
    for (const auto& blk : dec_blocks) blk.init(ps, rng);
    head.init_he(ps, rng);
  }

  void check_input(const Tensor3<T>& x) const {
    if (x.c != cfg.in_channels) {
      throw StructuralError("UNet: expected " + std::to_string(cfg.in_channels) + " input channels, got " +
                            std::to_string(x.c));
    }
    const int f = cfg.downsample_factor();
    if (x.h % f != 0 || x.w % f != 0 || x.h == 0 || x.w == 0) {
      throw StructuralError("UNet: input " + std::to_string(x.h) + "x" + std::to_string(x.w) +
                            " not divisible by the downsample factor " + std::to_string(f));
    }
  }

  /// Class scores (num_classes, H, W). Pass a cache to enable backward().
  Tensor3<T> forward(const ParamStore<T>& ps, const Tensor3<T>& x, UNetCache<T>* cache) const {
    check_input(x);
    UNetCache<T> local;
    UNetCache<T>& cc = cache != nullptr ? *cache : local;
    cc.enc.resize(enc_blocks.size());
    cc.pools.resize(enc_blocks.size() - 1);
    cc.dec.resize(dec_blocks.size());
    ConvScratch<T> scratch;

    conv_block_forward(enc_blocks[0], ps, x, cc.enc[0], scratch);
    for (size_t i = 1; i < enc_blocks.size(); ++i) {
      Tensor3<T> pooled;
      maxpool2_forward(cc.enc[i - 1].r2, pooled, &cc.pools[i - 1]);
      conv_block_forward(enc_blocks[i], ps, pooled, cc.enc[i], scratch);
    }

    const Tensor3<T>* cur = &cc.enc.back().r2;
    for (size_t j = 0; j < dec_blocks.size(); ++j) {
      const size_t skip = enc_blocks.size() - 2 - j;
      Tensor3<T> up, cat;
      upsample2_forward(*cur, up);
      concat_channels(up, cc.enc[skip].r2, cat);
      conv_block_forward(dec_blocks[j], ps, cat, cc.dec[j], scratch);
      cur = &cc.dec[j].r2;
    }

    Tensor3<T> logits;
    head.forward(ps, *cur, logits);
    return logits;
  }

  /// Accumulates parameter gradients for d(loss)/d(logits) recorded against
  /// the caches produced by forward(). Gradients add onto ps.grads.
  void backward(ParamStore<T>& ps, const Tensor3<T>& dlogits, const UNetCache<T>& cache) const {
    if (cache.enc.size() != enc_blocks.size() || cache.dec.size() != dec_blocks.size()) {
      throw StructuralError("UNet::backward: cache does not match this topology");
    }
    ConvScratch<T> scratch;
    // d(encoder output) contributions arriving through the skip connections;
    // filled by the decoder walk, consumed by the encoder walk.
    std::vector<Tensor3<T>> skip_grads(enc_blocks.size());

    Tensor3<T> dcur;
    head.backward(ps, cache.dec.back().r2, dlogits, &dcur);

    for (size_t j = dec_blocks.size(); j-- > 0;) {
      const size_t skip = enc_blocks.size() - 2 - j;
      const int skip_ch = enc_blocks[skip].conv2.out_ch;
      Tensor3<T> dcat, dup, ddown;
      conv_block_backward(dec_blocks[j], ps, dcur, &dcat, cache.dec[j], scratch);
      split_channels(dcat, dup, skip_grads[skip], dcat.c - skip_ch, skip_ch);
      upsample2_backward(dup, ddown);
      dcur = std::move(ddown);
    }

    for (size_t i = enc_blocks.size(); i-- > 0;) {
      Tensor3<T> dinput;
      conv_block_backward(enc_blocks[i], ps, dcur, i == 0 ? nullptr : &dinput, cache.enc[i], scratch);
      if (i == 0) break;
      Tensor3<T> dprev;
      maxpool2_backward(dinput, dprev, cache.pools[i - 1]);
      check_same_shape(dprev, skip_grads[i - 1], "UNet::backward skip gradient");
      for (size_t t = 0; t < dprev.v.size(); ++t) dprev.v[t] += skip_grads[i - 1].v[t];
      dcur = std::move(dprev);
    }
  }
};

}  // namespace scribblevs
