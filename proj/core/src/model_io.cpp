#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "multibin/errors.hpp"
#include "multibin/model.hpp"

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian; big-endian hosts are unsupported");

namespace multibin {

namespace {

constexpr const char* kMagic = "MULTIBIN-MODEL v1";

void write_doubles(std::ostream& out, const double* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(count * sizeof(double)));
}

// Row-major on disk; Eigen matrices are column-major in memory.
void write_matrix_row_major(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      write_doubles(out, &v, 1);
    }
  }
}

void read_doubles(std::istream& in, double* data, std::size_t count,
                  const std::filesystem::path& path) {
  in.read(reinterpret_cast<char*>(data),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double)) {
    throw ParseError("model file truncated: " + path.string());
  }
}

void read_matrix_row_major(std::istream& in, Eigen::MatrixXd& m,
                           const std::filesystem::path& path) {
  std::vector<double> buf(static_cast<std::size_t>(m.size()));
  read_doubles(in, buf.data(), buf.size(), path);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = buf[i++];
    }
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string next_line(std::istream& in, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError("model file truncated in header: " + path.string());
  }
  return line;
}

}  // namespace

void save_model(const std::filesystem::path& path, const AnyModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ParseError("cannot open model file for writing: " + path.string());
  }
  out << kMagic << "\n";
  if (const auto* q = std::get_if<QuantumShallowModel>(&model)) {
    out << "kind quantum\n";
    out << "dims " << q->neurons() << " " << q->features() << "\n";
    out << "relaxed " << (q->relaxed_l1 ? 1 : 0) << "\n";
    write_matrix_row_major(out, q->hidden_weights);
    write_doubles(out, q->output_weights.data(),
                  static_cast<std::size_t>(q->output_weights.size()));
    write_doubles(out, &q->bias, 1);
  } else {
    const auto& m = std::get<MlpBaselineModel>(model);
    out << "kind classical\n";
    out << "dims " << m.depth() << " " << m.neurons() << " " << m.features() << "\n";
    out << "dropout " << format_double(m.dropout_rate) << "\n";
    for (const auto& layer : m.layers) {
      write_matrix_row_major(out, layer.weights);
      write_doubles(out, layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
      write_doubles(out, layer.gamma.data(), static_cast<std::size_t>(layer.gamma.size()));
      write_doubles(out, layer.beta.data(), static_cast<std::size_t>(layer.beta.size()));
      write_doubles(out, layer.running_mean.data(),
                    static_cast<std::size_t>(layer.running_mean.size()));
      write_doubles(out, layer.running_var.data(),
                    static_cast<std::size_t>(layer.running_var.size()));
    }
    write_doubles(out, m.head_weights.data(),
                  static_cast<std::size_t>(m.head_weights.size()));
    write_doubles(out, &m.head_bias, 1);
  }
  if (!out) {
    throw ParseError("failed writing model file: " + path.string());
  }
}

AnyModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open model file: " + path.string());
  }
  if (next_line(in, path) != kMagic) {
    throw ParseError("bad model file magic in " + path.string());
  }
  std::istringstream kind_line(next_line(in, path));
  std::string tag, kind;
  kind_line >> tag >> kind;
  if (tag != "kind" || (kind != "quantum" && kind != "classical")) {
    throw ParseError("bad kind line in " + path.string());
  }

  if (kind == "quantum") {
    std::istringstream dims(next_line(in, path));
    int m = 0, n = 0;
    std::string dtag;
    dims >> dtag >> m >> n;
    if (dtag != "dims" || m < 1 || n < 1) {
      throw ParseError("bad dims line in " + path.string());
    }
    std::istringstream relaxed(next_line(in, path));
    std::string rtag;
    int rflag = 0;
    relaxed >> rtag >> rflag;
    if (rtag != "relaxed") {
      throw ParseError("bad relaxed line in " + path.string());
    }
    QuantumShallowModel model;
    model.relaxed_l1 = rflag != 0;
    model.hidden_weights.resize(m, n);
    model.output_weights.resize(m);
    read_matrix_row_major(in, model.hidden_weights, path);
    read_doubles(in, model.output_weights.data(), static_cast<std::size_t>(m), path);
    read_doubles(in, &model.bias, 1, path);
    check_invariants(model);
    return model;
  }

  std::istringstream dims(next_line(in, path));
  int d = 0, m = 0, n = 0;
  std::string dtag;
  dims >> dtag >> d >> m >> n;
  if (dtag != "dims" || d < 1 || m < 1 || n < 1) {
    throw ParseError("bad dims line in " + path.string());
  }
  std::istringstream dropout(next_line(in, path));
  std::string ptag;
  double rate = 0.0;
  dropout >> ptag >> rate;
  if (ptag != "dropout" || rate < 0.0 || rate >= 1.0) {
    throw ParseError("bad dropout line in " + path.string());
  }
  MlpBaselineModel model;
  model.dropout_rate = rate;
  model.layers.resize(d);
  int in_dim = n;
  for (auto& layer : model.layers) {
    layer.weights.resize(m, in_dim);
    layer.bias.resize(m);
    layer.gamma.resize(m);
    layer.beta.resize(m);
    layer.running_mean.resize(m);
    layer.running_var.resize(m);
    read_matrix_row_major(in, layer.weights, path);
    read_doubles(in, layer.bias.data(), static_cast<std::size_t>(m), path);
    read_doubles(in, layer.gamma.data(), static_cast<std::size_t>(m), path);
    read_doubles(in, layer.beta.data(), static_cast<std::size_t>(m), path);
    read_doubles(in, layer.running_mean.data(), static_cast<std::size_t>(m), path);
    read_doubles(in, layer.running_var.data(), static_cast<std::size_t>(m), path);
    in_dim = m;
  }
  model.head_weights.resize(m);
  read_doubles(in, model.head_weights.data(), static_cast<std::size_t>(m), path);
  read_doubles(in, &model.head_bias, 1, path);
  check_invariants(model);
  return model;
}

}  // namespace multibin
