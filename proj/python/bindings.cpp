// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <sstream>

#include "paca/config.hpp"
#include "paca/cost_model.hpp"
#include "paca/descent.hpp"
#include "paca/errors.hpp"
#include "paca/kernels.hpp"
#include "paca/layers.hpp"
#include "paca/quant.hpp"
#include "paca/selection.hpp"
#include "paca/trainer.hpp"

namespace py = pybind11;
using namespace paca;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  std::vector<double> buf(a.data(), a.data() + rows * cols);
  return Matrix(rows, cols, std::move(buf));
}

Array to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::memcpy(out.mutable_data(), m.data().data(), m.bytes());
  return out;
}

std::vector<std::size_t> to_list(const IndexSet& s) {
  return {s.indices().begin(), s.indices().end()};
}

}  // namespace

PYBIND11_MODULE(_paca, m) {
  m.doc() = "paca-lab native core";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<IndexError>(m, "IndexError", PyExc_IndexError);
  py::register_exception<StateError>(m, "StateError", PyExc_RuntimeError);
  py::register_exception<DecodeError>(m, "DecodeError", PyExc_ValueError);
  py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("matmul", [](const Array& a, const Array& b) {
    return to_array(matmul(to_matrix(a), to_matrix(b)));
  });
  m.def("transpose", [](const Array& a) { return to_array(transpose(to_matrix(a))); });
  m.def("gather_rows", [](const Array& x, std::vector<std::size_t> idx) {
    const Matrix mx = to_matrix(x);
    return to_array(gather_rows(mx, IndexSet(std::move(idx), mx.rows())));
  });
  m.def("gather_cols", [](const Array& w, std::vector<std::size_t> idx) {
    const Matrix mw = to_matrix(w);
    return to_array(gather_cols(mw, IndexSet(std::move(idx), mw.cols())));
  });
  m.def(
      "scatter_cols_add",
      [](const Array& w, std::vector<std::size_t> idx, const Array& delta, double coeff) {
        Matrix mw = to_matrix(w);
        const IndexSet s(std::move(idx), mw.cols());
        scatter_cols_add(mw, s, to_matrix(delta), coeff);
        return to_array(mw);
      },
      "Returns a copy of w with coeff * delta added to the listed columns.");

  m.def("linear_forward", [](const Array& w, const Array& x) {
    return to_array(linear_forward(LinearParams<double>{to_matrix(w)}, to_matrix(x), false).out);
  });
  m.def(
      "linear_backward",
      [](const Array& w, const Array& x, const Array& g) {
        const LinearParams<double> p{to_matrix(w)};
        auto f = linear_forward(p, to_matrix(x), true);
        auto grads = linear_backward(p, to_matrix(g), f.cache);
        return py::make_tuple(to_array(grads.g_in), to_array(grads.g_w));
      },
      "(g_in, g_w) for output gradient g at input x.");
  m.def("lora_forward", [](const Array& w, const Array& a, const Array& b, double scale,
                           const Array& x) {
    const LoRAParams<double> lp{to_matrix(a), to_matrix(b), scale};
    return to_array(lora_forward(LinearParams<double>{to_matrix(w)}, lp, to_matrix(x), false).out);
  });
  m.def(
      "lora_backward",
      [](const Array& w, const Array& a, const Array& b, double scale, const Array& x,
         const Array& g) {
        const LinearParams<double> base{to_matrix(w)};
        const LoRAParams<double> lp{to_matrix(a), to_matrix(b), scale};
        auto f = lora_forward(base, lp, to_matrix(x), true);
        auto grads = lora_backward(base, lp, to_matrix(g), f.cache);
        return py::make_tuple(to_array(grads.g_in), to_array(grads.g_a), to_array(grads.g_b));
      },
      "(g_in, g_a, g_b).");
  m.def("lora_merge", [](const Array& w, const Array& a, const Array& b, double scale) {
    const LoRAParams<double> lp{to_matrix(a), to_matrix(b), scale};
    return to_array(lora_merge(LinearParams<double>{to_matrix(w)}, lp).w);
  });
  m.def(
      "paca_forward",
      [](const Array& w, std::vector<std::size_t> idx, const Array& x) {
        Matrix mw = to_matrix(w);
        const std::size_t d_in = mw.cols();
        const PaCAParams<double> pp(std::move(mw), IndexSet(std::move(idx), d_in));
        auto f = paca_forward(pp, to_matrix(x), true);
        return py::make_tuple(to_array(f.out), f.cache.bytes());
      },
      "(output, cached activation bytes).");
  m.def(
      "paca_backward",
      [](const Array& w, std::vector<std::size_t> idx, const Array& x, const Array& g) {
        Matrix mw = to_matrix(w);
        const std::size_t d_in = mw.cols();
        const PaCAParams<double> pp(std::move(mw), IndexSet(std::move(idx), d_in));
        auto f = paca_forward(pp, to_matrix(x), true);
        auto grads = paca_backward(pp, to_matrix(g), f.cache);
        return py::make_tuple(to_array(grads.g_in), to_array(grads.g_p));
      },
      "(g_in, g_p).");
  m.def("expected_cache_bytes", [](const std::string& method, std::size_t d_in, std::size_t r,
                                   std::size_t n, std::size_t dtype_size) {
    return expected_cache_bytes(parse_method(method), d_in, r, n, dtype_size);
  });

  m.def("select_random", [](std::size_t d_in, std::size_t r, std::uint64_t seed) {
    return to_list(select_random(d_in, r, seed));
  });
  m.def("select_by_weight_norm", [](const Array& w, std::size_t r) {
    return to_list(select_by_weight_norm(to_matrix(w), r));
  });
  m.def("select_by_grad", [](std::vector<double> stats, std::size_t steps, std::size_t r) {
    return to_list(select_by_grad(GradStats{std::move(stats), steps}, r));
  });

  m.def("nf4_levels", [] {
    const auto& l = nf4_codebook().levels;
    return std::vector<double>(l.begin(), l.end());
  });
  m.def("quantize_block", [](std::vector<double> vals) {
    auto q = quantize_block<double>(vals);
    return py::make_tuple(q.codes, q.absmax);
  });
  m.def("dequantize_block", [](std::vector<std::uint8_t> codes, float absmax) {
    return dequantize_block<double>(codes, absmax);
  });
  m.def(
      "qpaca_roundtrip",
      [](const Array& w, std::vector<std::size_t> idx, std::size_t block_size) {
        const Matrix mw = to_matrix(w);
        const auto qw = qpaca_pack(mw, IndexSet(std::move(idx), mw.cols()), block_size);
        std::ostringstream out;
        write_qpaca(out, qw);
        const std::string bytes = out.str();
        std::istringstream in(bytes);
        const auto back = read_qpaca<double>(in);
        return py::make_tuple(to_array(qpaca_materialize(back)), py::bytes(bytes));
      },
      py::arg("w"), py::arg("idx"), py::arg("block_size") = kDefaultBlockSize,
      "Packs, serializes, reads back and materializes; returns (matrix, file bytes).");
  m.def("qpaca_weight_bytes", &qpaca_weight_bytes);

  m.def(
      "flop_linear",
      [](std::size_t d_in, std::size_t d_out, std::size_t n, const std::string& method,
         std::size_t r) {
        const auto f = flop_linear(d_in, d_out, n, parse_method(method), r);
        py::dict d;
        d["forward"] = f.forward;
        d["backward_input"] = f.backward_input;
        d["backward_weight"] = f.backward_weight;
        d["total"] = f.total();
        return d;
      },
      py::arg("d_in"), py::arg("d_out"), py::arg("n"), py::arg("method"), py::arg("r") = 0);
  m.def("lipschitz_of_quadratic",
        [](const Array& x) { return lipschitz_of_quadratic(to_matrix(x)); });
  m.def("descent_check", [](const Array& x, const Array& y, const Array& w0,
                            std::vector<std::size_t> idx, double eta, std::size_t steps) {
    const QuadraticProblem prob(to_matrix(x), to_matrix(y));
    const std::size_t d_in = prob.x.rows();
    const auto out = descent_check(prob, to_matrix(w0), IndexSet(std::move(idx), d_in), eta, steps);
    py::list rows;
    for (const auto& s : out) {
      py::dict d;
      d["step"] = s.step;
      d["loss"] = s.loss;
      d["loss_next"] = s.loss_next;
      d["grad_p_sq"] = s.grad_p_sq;
      d["bound"] = s.bound;
      d["holds"] = s.holds;
      rows.append(d);
    }
    return rows;
  });

  m.def("_run_experiment", [](const std::string& json_text) {
    const auto cfg = parse_config(json_text);
    TrainLog log;
    {
      py::gil_scoped_release release;
      log = run_experiment(cfg);
    }
    std::vector<double> losses;
    for (const auto& s : log.steps) losses.push_back(s.loss);
    return py::make_tuple(summary_json(log), losses);
  });
}
