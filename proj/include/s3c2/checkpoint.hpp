#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "s3c2/error.hpp"
#include "s3c2/nn.hpp"

// Text checkpoint format, one self-describing file per model. Doubles are
// written with 17 significant digits, which round-trips IEEE-754 exactly.

namespace s3c2 {

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string expect_token(std::istream& is, const char* what) {
    std::string tok;
    if (!(is >> tok)) fail(ErrKind::Parse, "checkpoint: missing ", what);
    return tok;
}

inline void expect_keyword(std::istream& is, const std::string& kw) {
    const std::string tok = expect_token(is, kw.c_str());
    if (tok != kw)
        fail(ErrKind::Parse, "checkpoint: expected '", kw, "', found '", tok, "'");
}

inline double read_double(std::istream& is, const char* what) {
    double v;
    if (!(is >> v)) fail(ErrKind::Parse, "checkpoint: bad value for ", what);
    return v;
}

inline std::size_t read_size(std::istream& is, const char* what) {
    long long v;
    if (!(is >> v) || v < 0) fail(ErrKind::Parse, "checkpoint: bad count for ", what);
    return static_cast<std::size_t>(v);
}

}  // namespace detail

inline void save_network(std::ostream& os, const Network& net) {
    os << "s3c2net 1\n";
    os << "layers " << net.layers.size() << "\n";
    for (const DenseLayer& l : net.layers) {
        os << "layer " << l.in_dim() << " " << l.out_dim() << " "
           << to_string(l.activation) << " " << detail::format_double(l.dropout_rate)
           << "\n";
        for (std::size_t i = 0; i < l.in_dim(); ++i) {
            const double* row = l.weights.row_ptr(i);
            for (std::size_t j = 0; j < l.out_dim(); ++j) {
                if (j) os << " ";
                os << detail::format_double(row[j]);
            }
            os << "\n";
        }
        for (std::size_t j = 0; j < l.out_dim(); ++j) {
            if (j) os << " ";
            os << detail::format_double(l.biases[j]);
        }
        os << "\n";
    }
}

inline Network load_network(std::istream& is) {
    detail::expect_keyword(is, "s3c2net");
    if (detail::read_size(is, "format version") != 1)
        fail(ErrKind::Parse, "checkpoint: unsupported s3c2net version");
    detail::expect_keyword(is, "layers");
    const std::size_t n_layers = detail::read_size(is, "layer count");
    Network net;
    for (std::size_t li = 0; li < n_layers; ++li) {
        detail::expect_keyword(is, "layer");
        DenseLayer l;
        const std::size_t in_dim = detail::read_size(is, "in_dim");
        const std::size_t out_dim = detail::read_size(is, "out_dim");
        l.activation = activation_from_string(detail::expect_token(is, "activation"));
        l.dropout_rate = detail::read_double(is, "dropout");
        l.weights = Matrix(in_dim, out_dim);
        for (double& w : l.weights.data()) w = detail::read_double(is, "weight");
        l.biases.resize(out_dim);
        for (double& b : l.biases) b = detail::read_double(is, "bias");
        if (!l.weights.all_finite())
            fail(ErrKind::Parse, "checkpoint: non-finite weight in layer ", li);
        net.layers.push_back(std::move(l));
    }
    net.validate();
    return net;
}

inline void save_network_file(const std::string& path, const Network& net) {
    std::ofstream os(path);
    if (!os) fail(ErrKind::Io, "cannot open '", path, "' for writing");
    save_network(os, net);
    if (!os) fail(ErrKind::Io, "write failed for '", path, "'");
}

inline Network load_network_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(ErrKind::Io, "cannot open '", path, "'");
    return load_network(is);
}

}  // namespace s3c2
