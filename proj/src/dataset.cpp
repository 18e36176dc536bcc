#include "ivprop/dataset.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace ivp::data {

IntervalVector IntervalDataset::input_row(std::size_t r) const {
    IntervalVector v;
    const std::size_t d = inputs.lo.shape[1];
    v.reserve(d);
    for (std::size_t c = 0; c < d; ++c) v.push_back(inputs.at(r, c));
    return v;
}

void validate(const IntervalDataset& d) {
    require_same_shape(d.inputs.lo, d.inputs.hi, "IntervalDataset inputs");
    require_same_shape(d.outputs.lo, d.outputs.hi, "IntervalDataset outputs");
    if (d.inputs.lo.shape[0] != d.outputs.lo.shape[0])
        throw ShapeError("IntervalDataset: row count mismatch");
    for (std::size_t i = 0; i < d.inputs.lo.size(); ++i)
        if (!(d.inputs.lo[i] <= d.inputs.hi[i]))
            throw std::invalid_argument("IntervalDataset: input lo > hi");
    for (std::size_t i = 0; i < d.outputs.lo.size(); ++i)
        if (!(d.outputs.lo[i] <= d.outputs.hi[i]))
            throw std::invalid_argument("IntervalDataset: output lo > hi");
}

Tensor FunctionDataset::sensor_matrix() const {
    const std::size_t n = samples.size(), m = sensor_dim();
    Tensor out = Tensor::zeros({n, m});
    for (std::size_t i = 0; i < n; ++i)
        std::copy(samples[i].sensors.data.begin(), samples[i].sensors.data.end(), out.row_ptr(i));
    return out;
}

Tensor FunctionDataset::value_matrix() const {
    const std::size_t n = samples.size(), p = coords.shape[0];
    Tensor out = Tensor::zeros({n, p});
    for (std::size_t i = 0; i < n; ++i)
        std::copy(samples[i].values.data.begin(), samples[i].values.data.end(), out.row_ptr(i));
    return out;
}

namespace {

std::ofstream open_csv_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << std::setprecision(17);
    return os;
}

std::vector<double> parse_row(const std::string& line) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    return row;
}

Tensor read_csv_body(std::ifstream& is, const std::string& path) {
    std::string line;
    std::vector<double> data;
    std::size_t cols = 0, rows = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const std::vector<double> row = parse_row(line);
        if (cols == 0)
            cols = row.size();
        else if (row.size() != cols)
            throw std::runtime_error(path + ": ragged csv row " + std::to_string(rows + 1));
        data.insert(data.end(), row.begin(), row.end());
        ++rows;
    }
    if (rows == 0) throw std::runtime_error(path + ": empty csv");
    return Tensor::checked({rows, cols}, std::move(data));
}

void write_body(std::ofstream& os, const Tensor& m) {
    for (std::size_t i = 0; i < m.shape[0]; ++i) {
        for (std::size_t j = 0; j < m.shape[1]; ++j)
            os << m.at(i, j) << (j + 1 == m.shape[1] ? '\n' : ',');
    }
}

}  // namespace

void write_point_csv(const std::string& path, const PointDataset& d) {
    auto os = open_csv_out(path);
    const std::size_t dd = d.inputs.shape[1], m = d.outputs.shape[1];
    for (std::size_t j = 0; j < dd; ++j) os << "x_" << (j + 1) << ",";
    for (std::size_t j = 0; j < m; ++j) os << "y_" << (j + 1) << (j + 1 == m ? '\n' : ',');
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t j = 0; j < dd; ++j) os << d.inputs.at(i, j) << ',';
        for (std::size_t j = 0; j < m; ++j) os << d.outputs.at(i, j) << (j + 1 == m ? '\n' : ',');
    }
}

PointDataset read_point_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    std::string header;
    std::getline(is, header);
    std::size_t d = 0, m = 0;
    {
        std::stringstream ss(header);
        std::string col;
        while (std::getline(ss, col, ',')) {
            if (col.rfind("x_", 0) == 0) ++d;
            else if (col.rfind("y_", 0) == 0) ++m;
            else throw std::runtime_error(path + ": unexpected column '" + col + "'");
        }
    }
    const Tensor body = read_csv_body(is, path);
    if (body.shape[1] != d + m) throw std::runtime_error(path + ": column count mismatch");
    PointDataset out;
    out.inputs = Tensor::zeros({body.shape[0], d});
    out.outputs = Tensor::zeros({body.shape[0], m});
    for (std::size_t i = 0; i < body.shape[0]; ++i) {
        for (std::size_t j = 0; j < d; ++j) out.inputs.at(i, j) = body.at(i, j);
        for (std::size_t j = 0; j < m; ++j) out.outputs.at(i, j) = body.at(i, d + j);
    }
    return out;
}

void write_interval_matrix_csv(const std::string& path, const IntervalTable& t,
                               const std::string& col_prefix) {
    require_same_shape(t.lo, t.hi, "write_interval_matrix_csv");
    auto os = open_csv_out(path);
    const std::size_t c = t.lo.shape[1];
    for (std::size_t j = 0; j < c; ++j)
        os << col_prefix << (j + 1) << "_lo," << col_prefix << (j + 1) << "_hi"
           << (j + 1 == c ? '\n' : ',');
    for (std::size_t i = 0; i < t.lo.shape[0]; ++i)
        for (std::size_t j = 0; j < c; ++j)
            os << t.lo.at(i, j) << ',' << t.hi.at(i, j) << (j + 1 == c ? '\n' : ',');
}

IntervalTable read_interval_matrix_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    std::string header;
    std::getline(is, header);
    const Tensor body = read_csv_body(is, path);
    if (body.shape[1] % 2 != 0) throw std::runtime_error(path + ": odd interval column count");
    const std::size_t c = body.shape[1] / 2;
    IntervalTable t;
    t.lo = Tensor::zeros({body.shape[0], c});
    t.hi = Tensor::zeros({body.shape[0], c});
    for (std::size_t i = 0; i < body.shape[0]; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            t.lo.at(i, j) = body.at(i, 2 * j);
            t.hi.at(i, j) = body.at(i, 2 * j + 1);
        }
    return t;
}

void write_interval_csv(const std::string& path, const IntervalDataset& d) {
    auto os = open_csv_out(path);
    const std::size_t dd = d.inputs.lo.shape[1], m = d.outputs.lo.shape[1];
    for (std::size_t j = 0; j < dd; ++j) os << "x" << (j + 1) << "_lo,x" << (j + 1) << "_hi,";
    for (std::size_t j = 0; j < m; ++j)
        os << "y" << (j + 1) << "_lo,y" << (j + 1) << "_hi" << (j + 1 == m ? '\n' : ',');
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t j = 0; j < dd; ++j)
            os << d.inputs.lo.at(i, j) << ',' << d.inputs.hi.at(i, j) << ',';
        for (std::size_t j = 0; j < m; ++j)
            os << d.outputs.lo.at(i, j) << ',' << d.outputs.hi.at(i, j)
               << (j + 1 == m ? '\n' : ',');
    }
}

IntervalDataset read_interval_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    std::string header;
    std::getline(is, header);
    std::size_t d = 0, m = 0;
    {
        std::stringstream ss(header);
        std::string col;
        while (std::getline(ss, col, ',')) {
            if (col.rfind('x', 0) == 0 && col.find("_lo") != std::string::npos) ++d;
            if (col.rfind('y', 0) == 0 && col.find("_lo") != std::string::npos) ++m;
        }
    }
    const Tensor body = read_csv_body(is, path);
    if (body.shape[1] != 2 * (d + m)) throw std::runtime_error(path + ": column count mismatch");
    IntervalDataset out;
    out.inputs.lo = Tensor::zeros({body.shape[0], d});
    out.inputs.hi = Tensor::zeros({body.shape[0], d});
    out.outputs.lo = Tensor::zeros({body.shape[0], m});
    out.outputs.hi = Tensor::zeros({body.shape[0], m});
    for (std::size_t i = 0; i < body.shape[0]; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            out.inputs.lo.at(i, j) = body.at(i, 2 * j);
            out.inputs.hi.at(i, j) = body.at(i, 2 * j + 1);
        }
        for (std::size_t j = 0; j < m; ++j) {
            out.outputs.lo.at(i, j) = body.at(i, 2 * d + 2 * j);
            out.outputs.hi.at(i, j) = body.at(i, 2 * d + 2 * j + 1);
        }
    }
    validate(out);
    return out;
}

void write_matrix_csv(const std::string& path, const Tensor& m, const std::string& col_prefix) {
    auto os = open_csv_out(path);
    for (std::size_t j = 0; j < m.shape[1]; ++j)
        os << col_prefix << (j + 1) << (j + 1 == m.shape[1] ? '\n' : ',');
    write_body(os, m);
}

Tensor read_matrix_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    std::string header;
    std::getline(is, header);
    return read_csv_body(is, path);
}

void write_function_dataset(const std::string& dir, const std::string& split,
                            const FunctionDataset& d) {
    write_matrix_csv(dir + "/" + split + "_sensors.csv", d.sensor_matrix(), "u");
    write_matrix_csv(dir + "/" + split + "_values.csv", d.value_matrix(), "g");
    write_matrix_csv(dir + "/coords.csv", d.coords, "c");
}

FunctionDataset read_function_dataset(const std::string& dir, const std::string& split) {
    FunctionDataset out;
    const Tensor sensors = read_matrix_csv(dir + "/" + split + "_sensors.csv");
    const Tensor values = read_matrix_csv(dir + "/" + split + "_values.csv");
    out.coords = read_matrix_csv(dir + "/coords.csv");
    if (sensors.shape[0] != values.shape[0])
        throw std::runtime_error("function dataset: sensors/values row mismatch");
    for (std::size_t i = 0; i < sensors.shape[0]; ++i) {
        FunctionSample s;
        s.sensors = Tensor::vector(std::vector<double>(sensors.row_ptr(i),
                                                       sensors.row_ptr(i) + sensors.shape[1]));
        s.values = Tensor::vector(std::vector<double>(values.row_ptr(i),
                                                      values.row_ptr(i) + values.shape[1]));
        s.coords = out.coords;
        out.samples.push_back(std::move(s));
    }
    return out;
}

void write_interval_function_dataset(const std::string& dir, const std::string& split,
                                     const IntervalFunctionDataset& d) {
    write_interval_matrix_csv(dir + "/" + split + "_sensors.csv", d.sensors, "u");
    write_interval_matrix_csv(dir + "/" + split + "_values.csv", d.values, "g");
    write_matrix_csv(dir + "/coords.csv", d.coords, "c");
}

IntervalFunctionDataset read_interval_function_dataset(const std::string& dir,
                                                       const std::string& split) {
    IntervalFunctionDataset out;
    out.sensors = read_interval_matrix_csv(dir + "/" + split + "_sensors.csv");
    out.values = read_interval_matrix_csv(dir + "/" + split + "_values.csv");
    out.coords = read_matrix_csv(dir + "/coords.csv");
    if (out.sensors.lo.shape[0] != out.values.lo.shape[0])
        throw std::runtime_error("interval function dataset: row mismatch");
    return out;
}

void write_manifest(const std::string& path, const std::string& json_text) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << json_text << '\n';
}

std::string read_text_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace ivp::data
