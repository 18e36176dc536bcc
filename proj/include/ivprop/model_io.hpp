#pragma once

#include <iosfwd>
#include <string>

#include "ivprop/deeponet.hpp"
#include "ivprop/inn.hpp"
#include "ivprop/layers.hpp"

// Versioned flat-text model files: layer shapes plus row-major values,
// full double precision. One format for every model family; INN layers
// store the raw (center, radius_raw) tensor pairs.

namespace ivp::io {

inline constexpr const char* kModelMagic = "ivprop-model";
inline constexpr int kModelVersion = 1;

void save_model(const std::string& path, const nn::MlpModel& m);
void save_model(const std::string& path, const nn::RannModel& m);
void save_model(const std::string& path, const inn::InnModel& m);
void save_model(const std::string& path, const onet::DeepONet& m);
void save_model(const std::string& path, const onet::NaiveIntervalDeepONet& m);
void save_model(const std::string& path, const onet::InnDeepONet& m);

// Kind string stored in the file ("mlp", "rann", "inn", "deeponet",
// "naive-deeponet", "inn-deeponet").
std::string peek_model_kind(const std::string& path);

nn::MlpModel load_mlp(const std::string& path);
nn::RannModel load_rann(const std::string& path);
inn::InnModel load_inn(const std::string& path);
onet::DeepONet load_deeponet(const std::string& path);
onet::NaiveIntervalDeepONet load_naive_deeponet(const std::string& path);
onet::InnDeepONet load_inn_deeponet(const std::string& path);

}  // namespace ivp::io
