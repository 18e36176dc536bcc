#pragma once

#include <string>
#include <vector>

#include "ivprop/interval.hpp"
#include "ivprop/tensor.hpp"

// Dataset containers and their CSV/manifest file formats.

namespace ivp::data {

struct PointDataset {
    Tensor inputs;   // (N x d)
    Tensor outputs;  // (N x m)

    std::size_t size() const { return inputs.shape[0]; }
};

// Paired lo/hi matrices, lo <= hi elementwise.
struct IntervalTable {
    Tensor lo, hi;

    Interval at(std::size_t r, std::size_t c) const { return Interval(lo.at(r, c), hi.at(r, c)); }
};

struct IntervalDataset {
    IntervalTable inputs;   // (N x d)
    IntervalTable outputs;  // (N x m)

    std::size_t size() const { return inputs.lo.shape[0]; }
    IntervalVector input_row(std::size_t r) const;
};

void validate(const IntervalDataset& d);

// One functional realisation: u at the sensor grid, g at the query coords.
struct FunctionSample {
    Tensor sensors;  // (m)
    Tensor coords;   // (p x dim)
    Tensor values;   // (p)
};

struct FunctionDataset {
    std::vector<FunctionSample> samples;
    Tensor coords;  // shared (p x dim) grid

    std::size_t size() const { return samples.size(); }
    std::size_t sensor_dim() const { return samples.front().sensors.size(); }
    std::size_t coord_count() const { return coords.shape[0]; }
    // Sensor rows stacked (N x m) / value rows stacked (N x p).
    Tensor sensor_matrix() const;
    Tensor value_matrix() const;
};

// Interval version of a function dataset: sensors and values carry bounds,
// coords stay precise.
struct IntervalFunctionDataset {
    IntervalTable sensors;  // (N x m)
    IntervalTable values;   // (N x p)
    Tensor coords;          // (p x dim)

    std::size_t size() const { return sensors.lo.shape[0]; }
};

// --- CSV formats ---
// Pointwise: header x_1..x_d,y_1..y_m. Interval: x1_lo,x1_hi,...,y1_lo,y1_hi,...
// Function datasets: three CSVs per split (sensors, values, coords).

void write_point_csv(const std::string& path, const PointDataset& d);
PointDataset read_point_csv(const std::string& path);

void write_interval_csv(const std::string& path, const IntervalDataset& d);
IntervalDataset read_interval_csv(const std::string& path);

void write_matrix_csv(const std::string& path, const Tensor& m, const std::string& col_prefix);
Tensor read_matrix_csv(const std::string& path);

void write_interval_matrix_csv(const std::string& path, const IntervalTable& t,
                               const std::string& col_prefix);
IntervalTable read_interval_matrix_csv(const std::string& path);

// sensors/values/coords triplet under dir with the split name as prefix.
void write_function_dataset(const std::string& dir, const std::string& split,
                            const FunctionDataset& d);
FunctionDataset read_function_dataset(const std::string& dir, const std::string& split);

void write_interval_function_dataset(const std::string& dir, const std::string& split,
                                     const IntervalFunctionDataset& d);
IntervalFunctionDataset read_interval_function_dataset(const std::string& dir,
                                                       const std::string& split);

// Manifest: one JSON file naming problem, seed, grid and widths plus the
// files written next to it.
void write_manifest(const std::string& path, const std::string& json_text);
std::string read_text_file(const std::string& path);

}  // namespace ivp::data
