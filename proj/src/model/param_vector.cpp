#include "floral/model/param_vector.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace floral::model {

double ParamVector::l2_norm() const {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum);
}

ParamVector operator+(ParamVector a, const ParamVector& b) {
  a += b;
  return a;
}

ParamVector operator-(ParamVector a, const ParamVector& b) {
  a -= b;
  return a;
}

ParamVector operator*(double s, ParamVector a) {
  a *= s;
  return a;
}

double l2_distance(const ParamVector& a, const ParamVector& b) {
  ParamVector::check_compatible(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double dot(const ParamVector& a, const ParamVector& b) {
  ParamVector::check_compatible(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) sum += a.values[i] * b.values[i];
  return sum;
}

void save_checkpoint(const std::string& path, const ParamVector& params) {
  std::ofstream file(path);
  if (!file) throw InputError("cannot write checkpoint: " + path);
  file << "floral-checkpoint v1\n";
  file << "tag " << params.tag << "\n";
  file << "dim " << params.values.size() << "\n";
  char buffer[40];
  for (double v : params.values) {
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    file << buffer << "\n";
  }
}

ParamVector load_checkpoint(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw InputError("cannot read checkpoint: " + path);
  std::string magic, version;
  file >> magic >> version;
  if (magic != "floral-checkpoint" || version != "v1")
    throw ParseError(path + ": not a checkpoint file");
  std::string key;
  ParamVector params;
  file >> key >> params.tag;
  if (key != "tag") throw ParseError(path + ": missing tag header");
  std::size_t dim = 0;
  file >> key >> dim;
  if (key != "dim") throw ParseError(path + ": missing dim header");
  params.values.resize(dim);
  for (std::size_t i = 0; i < dim; ++i)
    if (!(file >> params.values[i])) throw ParseError(path + ": truncated checkpoint");
  return params;
}

}  // namespace floral::model
