#include "ivprop/model_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace ivp::io {

namespace {

void write_tensor(std::ostream& os, const char* tag, const Tensor& t) {
    os << tag;
    for (std::size_t d : t.shape) os << ' ' << d;
    os << '\n';
    for (std::size_t i = 0; i < t.size(); ++i) os << t[i] << (i + 1 == t.size() ? '\n' : ' ');
}

Tensor read_tensor(std::istream& is, const char* tag, std::size_t rank) {
    std::string got;
    is >> got;
    if (got != tag) throw std::runtime_error("model file: expected '" + std::string(tag) + "', got '" + got + "'");
    std::vector<std::size_t> shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
        is >> d;
        n *= d;
    }
    std::vector<double> data(n);
    for (auto& v : data) is >> v;
    if (!is) throw std::runtime_error("model file: truncated tensor data for " + std::string(tag));
    return Tensor::checked(std::move(shape), std::move(data));
}

void write_dense(std::ostream& os, const nn::DenseLayer& l) {
    os << "dense " << nn::activation_name(l.activation) << '\n';
    write_tensor(os, "W", l.weights);
    write_tensor(os, "b", l.bias);
}

nn::DenseLayer read_dense(std::istream& is) {
    std::string tag, act;
    is >> tag >> act;
    if (tag != "dense") throw std::runtime_error("model file: expected 'dense', got '" + tag + "'");
    nn::DenseLayer l;
    l.activation = nn::activation_from_name(act);
    l.weights = read_tensor(is, "W", 2);
    l.bias = read_tensor(is, "b", 1);
    return l;
}

void write_mlp(std::ostream& os, const nn::MlpModel& m) {
    os << "mlp " << m.layers.size() << '\n';
    for (const auto& l : m.layers) write_dense(os, l);
}

nn::MlpModel read_mlp(std::istream& is) {
    std::string tag;
    std::size_t n;
    is >> tag >> n;
    if (tag != "mlp") throw std::runtime_error("model file: expected 'mlp', got '" + tag + "'");
    nn::MlpModel m;
    for (std::size_t i = 0; i < n; ++i) m.layers.push_back(read_dense(is));
    return m;
}

void write_inn_layer(std::ostream& os, const inn::IntervalDenseLayer& l) {
    os << "inn-dense " << nn::activation_name(l.activation) << '\n';
    write_tensor(os, "Wc", l.w_center);
    write_tensor(os, "Wr", l.w_radius_raw);
    write_tensor(os, "bc", l.b_center);
    write_tensor(os, "br", l.b_radius_raw);
}

inn::IntervalDenseLayer read_inn_layer(std::istream& is) {
    std::string tag, act;
    is >> tag >> act;
    if (tag != "inn-dense")
        throw std::runtime_error("model file: expected 'inn-dense', got '" + tag + "'");
    inn::IntervalDenseLayer l;
    l.activation = nn::activation_from_name(act);
    l.w_center = read_tensor(is, "Wc", 2);
    l.w_radius_raw = read_tensor(is, "Wr", 2);
    l.b_center = read_tensor(is, "bc", 1);
    l.b_radius_raw = read_tensor(is, "br", 1);
    return l;
}

void write_inn(std::ostream& os, const inn::InnModel& m) {
    os << "inn-stack " << m.layers.size() << '\n';
    for (const auto& l : m.layers) write_inn_layer(os, l);
}

inn::InnModel read_inn(std::istream& is) {
    std::string tag;
    std::size_t n;
    is >> tag >> n;
    if (tag != "inn-stack")
        throw std::runtime_error("model file: expected 'inn-stack', got '" + tag + "'");
    inn::InnModel m;
    for (std::size_t i = 0; i < n; ++i) m.layers.push_back(read_inn_layer(is));
    return m;
}

std::ofstream open_out(const std::string& path, const char* kind) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write model file: " + path);
    os << std::setprecision(17);
    os << kModelMagic << " v" << kModelVersion << '\n';
    os << "kind " << kind << '\n';
    return os;
}

std::ifstream open_in(const std::string& path, std::string* kind) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read model file: " + path);
    std::string magic, version, ktag;
    is >> magic >> version >> ktag >> *kind;
    if (magic != kModelMagic || version != "v1" || ktag != "kind")
        throw std::runtime_error("not an ivprop model file: " + path);
    return is;
}

void expect_kind(const std::string& got, const char* want, const std::string& path) {
    if (got != want)
        throw std::runtime_error("model file " + path + ": kind '" + got + "', expected '" +
                                 want + "'");
}

}  // namespace

void save_model(const std::string& path, const nn::MlpModel& m) {
    auto os = open_out(path, "mlp");
    write_mlp(os, m);
}

void save_model(const std::string& path, const nn::RannModel& m) {
    auto os = open_out(path, "rann");
    write_mlp(os, m.hidden);
    write_dense(os, m.output_lo);
    write_dense(os, m.output_hi);
}

void save_model(const std::string& path, const inn::InnModel& m) {
    auto os = open_out(path, "inn");
    write_inn(os, m);
}

void save_model(const std::string& path, const onet::DeepONet& m) {
    auto os = open_out(path, "deeponet");
    write_mlp(os, m.branch);
    write_mlp(os, m.trunk);
}

void save_model(const std::string& path, const onet::NaiveIntervalDeepONet& m) {
    auto os = open_out(path, "naive-deeponet");
    write_mlp(os, m.branch);
    write_mlp(os, m.trunk);
    write_dense(os, m.head);
}

void save_model(const std::string& path, const onet::InnDeepONet& m) {
    auto os = open_out(path, "inn-deeponet");
    write_inn(os, m.branch);
    write_mlp(os, m.trunk);
    write_inn_layer(os, m.head);
}

std::string peek_model_kind(const std::string& path) {
    std::string kind;
    open_in(path, &kind);
    return kind;
}

nn::MlpModel load_mlp(const std::string& path) {
    std::string kind;
    auto is = open_in(path, &kind);
    expect_kind(kind, "mlp", path);
    return read_mlp(is);
}

nn::RannModel load_rann(const std::string& path) {
    std::string kind;
    auto is = open_in(path, &kind);
    expect_kind(kind, "rann", path);
    nn::RannModel m;
    m.hidden = read_mlp(is);
    m.output_lo = read_dense(is);
    m.output_hi = read_dense(is);
    return m;
}

inn::InnModel load_inn(const std::string& path) {
    std::string kind;
    auto is = open_in(path, &kind);
    expect_kind(kind, "inn", path);
    return read_inn(is);
}

onet::DeepONet load_deeponet(const std::string& path) {
    std::string kind;
    auto is = open_in(path, &kind);
    expect_kind(kind, "deeponet", path);
    onet::DeepONet m;
    m.branch = read_mlp(is);
    m.trunk = read_mlp(is);
    return m;
}

onet::NaiveIntervalDeepONet load_naive_deeponet(const std::string& path) {
    std::string kind;
    auto is = open_in(path, &kind);
    expect_kind(kind, "naive-deeponet", path);
    onet::NaiveIntervalDeepONet m;
    m.branch = read_mlp(is);
    m.trunk = read_mlp(is);
    m.head = read_dense(is);
    return m;
}

onet::InnDeepONet load_inn_deeponet(const std::string& path) {
    std::string kind;
    auto is = open_in(path, &kind);
    expect_kind(kind, "inn-deeponet", path);
    onet::InnDeepONet m;
    m.branch = read_inn(is);
    m.trunk = read_mlp(is);
    m.head = read_inn_layer(is);
    return m;
}

}  // namespace ivp::io
