#include <istream>
#include <ostream>
#include <sstream>

#include "cellflow/error.hpp"
#include "cellflow/lstm.hpp"
#include "cellflow/textio.hpp"

// Model file layout (whitespace separated, one record per line):
//
//   cellflow-lstm-model 1
//   head <regression|softmax>
//   input_size <n>
//   hidden_size <n>
//   bin_size <seconds>
//   history_len <n>
//   features <name,name,...>
//   target <name>
//   scaler_feature_min <v...>
//   scaler_feature_max <v...>
//   scaler_target <min> <max>
//   burst_threshold <v>
//   matrix W <rows> <cols>       followed by one line per row
//   matrix U <rows> <cols>
//   vector b <n>                 followed by one line of values
//   matrix head.W <rows> <cols>
//   vector head.b <n>
//   end
//
// Values use the shortest decimal form that parses back exactly.

namespace cellflow {
namespace {

constexpr std::string_view kMagic = "cellflow-lstm-model";
constexpr int kVersion = 1;

void write_values(std::ostream& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ' ';
    out << textio::format_double(values[i]);
  }
  out << '\n';
}

void write_matrix(std::ostream& out, std::string_view name, const Matrix& m) {
  out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) write_values(out, m.row(r));
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw Error("model file ended unexpectedly");
    return w;
  }

  void expect(std::string_view keyword) {
    const std::string w = word();
    if (w != keyword) {
      throw Error("model file: expected '" + std::string(keyword) + "', found '" + w + "'");
    }
  }

  double real() {
    const std::string w = word();
    const auto v = textio::parse_double(w);
    if (!v) throw Error("model file: invalid number '" + w + "'");
    return *v;
  }

  std::size_t count() {
    const std::string w = word();
    const auto v = textio::parse_int(w);
    if (!v || *v < 0) throw Error("model file: invalid count '" + w + "'");
    return static_cast<std::size_t>(*v);
  }

  std::vector<double> reals(std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = real();
    return v;
  }

  Matrix matrix(std::string_view name, std::size_t rows, std::size_t cols) {
    expect("matrix");
    expect(name);
    if (count() != rows || count() != cols) {
      throw Error("model file: matrix " + std::string(name) + " has unexpected dimensions");
    }
    Matrix m(rows, cols);
    for (double& x : m.values()) x = real();
    return m;
  }

  std::vector<double> vector(std::string_view name, std::size_t n) {
    expect("vector");
    expect(name);
    if (count() != n) throw Error("model file: vector " + std::string(name) + " has unexpected length");
    return reals(n);
  }

 private:
  std::istream& in_;
};

std::vector<std::string> split_names(const std::string& joined) {
  std::vector<std::string> names;
  std::stringstream ss(joined);
  std::string name;
  while (std::getline(ss, name, ',')) names.push_back(name);
  return names;
}

}  // namespace

void save_model(std::ostream& out, const LstmModel& m) {
  out << kMagic << ' ' << kVersion << '\n';
  out << "head " << head_kind_name(m.head.kind) << '\n';
  out << "input_size " << m.lstm.input_size << '\n';
  out << "hidden_size " << m.lstm.hidden_size << '\n';
  out << "bin_size " << textio::format_double(m.window.bin_size) << '\n';
  out << "history_len " << m.window.history_len << '\n';
  out << "features " << textio::join(m.window.feature_names, ",") << '\n';
  out << "target " << m.window.target_name << '\n';
  out << "scaler_feature_min ";
  write_values(out, m.scaler.feature_min());
  out << "scaler_feature_max ";
  write_values(out, m.scaler.feature_max());
  out << "scaler_target " << textio::format_double(m.scaler.target_min()) << ' '
      << textio::format_double(m.scaler.target_max()) << '\n';
  out << "burst_threshold " << textio::format_double(m.burst_threshold) << '\n';
  write_matrix(out, "W", m.lstm.W);
  write_matrix(out, "U", m.lstm.U);
  out << "vector b " << m.lstm.b.size() << '\n';
  write_values(out, m.lstm.b);
  write_matrix(out, "head.W", m.head.W);
  out << "vector head.b " << m.head.b.size() << '\n';
  write_values(out, m.head.b);
  out << "end\n";
}

LstmModel load_model(std::istream& in) {
  Reader r(in);
  if (r.word() != kMagic) throw Error("not a cellflow model file");
  if (r.count() != kVersion) throw Error("unsupported model format version");
  LstmModel m;
  r.expect("head");
  const HeadKind kind = parse_head_kind(r.word());
  r.expect("input_size");
  const std::size_t input = r.count();
  r.expect("hidden_size");
  const std::size_t hidden = r.count();
  if (input == 0 || hidden == 0) throw Error("model file: sizes must be positive");
  r.expect("bin_size");
  m.window.bin_size = r.real();
  r.expect("history_len");
  m.window.history_len = r.count();
  r.expect("features");
  m.window.feature_names = split_names(r.word());
  if (m.window.feature_names.size() != input) {
    throw Error("model file: feature list length differs from input_size");
  }
  r.expect("target");
  m.window.target_name = r.word();
  r.expect("scaler_feature_min");
  auto lo = r.reals(input);
  r.expect("scaler_feature_max");
  auto hi = r.reals(input);
  r.expect("scaler_target");
  const double tlo = r.real();
  const double thi = r.real();
  m.scaler = Scaler(std::move(lo), std::move(hi), tlo, thi);
  r.expect("burst_threshold");
  m.burst_threshold = r.real();

  m.lstm.input_size = input;
  m.lstm.hidden_size = hidden;
  m.lstm.W = r.matrix("W", kGateCount * hidden, input);
  m.lstm.U = r.matrix("U", kGateCount * hidden, hidden);
  m.lstm.b = r.vector("b", kGateCount * hidden);
  m.head.kind = kind;
  m.head.W = r.matrix("head.W", head_output_dim(kind), hidden);
  m.head.b = r.vector("head.b", head_output_dim(kind));
  r.expect("end");
  return m;
}

}  // namespace cellflow
