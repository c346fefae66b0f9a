#pragma once

#include <string>

#include "coxrs/survival.hpp"

namespace coxrs {

// CSV with header `time,event,z1,...,zp`, one row per subject, decimals
// formatted for exact IEEE-754 round trip.
void write_dataset_csv(const SurvivalDataset& data, const std::string& path);
SurvivalDataset read_dataset_csv(const std::string& path);

// Sidecar metadata (n, p, seed, specs, beta0) as JSON.
void write_dataset_meta(const SurvivalDataset& data, const std::string& path);

std::string format_double(double x);  // shortest exact decimal

}  // namespace coxrs
