#pragma once

#include "splatstream/raster.hpp"

namespace splatstream {

/// 10 log10(1 / MSE) over all channels; +infinity for identical images.
double psnr(const Image& a, const Image& b);

struct SsimConfig {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
};

/// Mean local SSIM over every valid window position, averaged over the three channels.
double ssim(const Image& a, const Image& b, const SsimConfig& config = {});

}  // namespace splatstream
