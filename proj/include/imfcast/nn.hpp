#pragma once

// From-scratch dense forecasters: a one-hidden-layer MLP and a single-layer
// LSTM, both with a scalar linear head. Gradients are plain backprop /
// backprop-through-time for the mean-squared-error loss; correctness is
// pinned by finite-difference tests.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "imfcast/rng.hpp"
#include "imfcast/tensor.hpp"

namespace imfcast {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

enum class Activation { tanh_fn, linear };

inline double activate(Activation a, double x) {
  return a == Activation::tanh_fn ? std::tanh(x) : x;
}

inline double activate_derivative(Activation a, double x) {
  if (a == Activation::linear) return 1.0;
  const double t = std::tanh(x);
  return 1.0 - t * t;
}

namespace detail {

inline void glorot_fill(std::vector<double>& w, std::size_t fan_in, std::size_t fan_out,
                        SeededRng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : w) v = rng.uniform(-limit, limit);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// MLP: y = w2 . act(W1^T x + b1) + b2
// ---------------------------------------------------------------------------

struct MlpModel {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  Activation hidden_activation = Activation::tanh_fn;
  Matrix w1;               // input_size x hidden_size
  std::vector<double> b1;  // hidden_size
  std::vector<double> w2;  // hidden_size
  double b2 = 0.0;

  std::size_t parameter_count() const {
    return w1.size() + b1.size() + w2.size() + 1;
  }

  void to_flat(std::vector<double>& out) const {
    out.clear();
    out.reserve(parameter_count());
    out.insert(out.end(), w1.data.begin(), w1.data.end());
    out.insert(out.end(), b1.begin(), b1.end());
    out.insert(out.end(), w2.begin(), w2.end());
    out.push_back(b2);
  }

  void from_flat(const std::vector<double>& flat) {
    const double* p = flat.data();
    std::copy(p, p + w1.size(), w1.data.begin());
    p += w1.size();
    std::copy(p, p + b1.size(), b1.begin());
    p += b1.size();
    std::copy(p, p + w2.size(), w2.begin());
    p += w2.size();
    b2 = *p;
  }
};

inline MlpModel make_mlp(std::size_t input_size, std::size_t hidden_size, SeededRng& rng,
                         Activation hidden_activation = Activation::tanh_fn) {
  MlpModel m;
  m.input_size = input_size;
  m.hidden_size = hidden_size;
  m.hidden_activation = hidden_activation;
  m.w1 = Matrix(input_size, hidden_size);
  m.b1.assign(hidden_size, 0.0);
  m.w2.assign(hidden_size, 0.0);
  detail::glorot_fill(m.w1.data, input_size, hidden_size, rng);
  detail::glorot_fill(m.w2, hidden_size, 1, rng);
  return m;
}

struct MlpTrace {
  std::vector<double> z1;  // pre-activations
  std::vector<double> a1;  // hidden activations
  double y = 0.0;
};

inline double mlp_forward(const MlpModel& m, std::span<const double> x, MlpTrace* trace = nullptr) {
  if (x.size() != m.input_size) {
    throw std::invalid_argument("mlp_forward: expected input of length " +
                                std::to_string(m.input_size) + ", got " + std::to_string(x.size()));
  }
  std::vector<double> z1(m.hidden_size, 0.0);
  for (std::size_t i = 0; i < m.input_size; ++i) {
    const double xi = x[i];
    const double* wrow = m.w1.data.data() + i * m.hidden_size;
    for (std::size_t j = 0; j < m.hidden_size; ++j) z1[j] += wrow[j] * xi;
  }
  double y = m.b2;
  std::vector<double> a1(m.hidden_size);
  for (std::size_t j = 0; j < m.hidden_size; ++j) {
    z1[j] += m.b1[j];
    a1[j] = activate(m.hidden_activation, z1[j]);
    y += m.w2[j] * a1[j];
  }
  if (trace) {
    trace->z1 = std::move(z1);
    trace->a1 = std::move(a1);
    trace->y = y;
  }
  return y;
}

struct MlpGradients {
  Matrix w1;
  std::vector<double> b1;
  std::vector<double> w2;
  double b2 = 0.0;

  void to_flat(std::vector<double>& out) const {
    out.clear();
    out.insert(out.end(), w1.data.begin(), w1.data.end());
    out.insert(out.end(), b1.begin(), b1.end());
    out.insert(out.end(), w2.begin(), w2.end());
    out.push_back(b2);
  }
};

// MSE gradients over a batch; returns the batch loss. Samples are reduced
// in index order so results are reproducible.
inline double mlp_backward(const MlpModel& m, std::span<const double* const> xs,
                           std::span<const double> ys, MlpGradients& g) {
  if (xs.empty() || xs.size() != ys.size()) {
    throw std::invalid_argument("mlp_backward: empty or mismatched batch");
  }
  g.w1 = Matrix(m.input_size, m.hidden_size);
  g.b1.assign(m.hidden_size, 0.0);
  g.w2.assign(m.hidden_size, 0.0);
  g.b2 = 0.0;
  const double inv_n = 1.0 / static_cast<double>(xs.size());
  double loss = 0.0;
  MlpTrace tr;
  for (std::size_t s = 0; s < xs.size(); ++s) {
    const std::span<const double> x(xs[s], m.input_size);
    const double y = mlp_forward(m, x, &tr);
    const double err = y - ys[s];
    loss += err * err * inv_n;
    const double dy = 2.0 * err * inv_n;
    g.b2 += dy;
    for (std::size_t j = 0; j < m.hidden_size; ++j) {
      g.w2[j] += dy * tr.a1[j];
      const double dz = dy * m.w2[j] * activate_derivative(m.hidden_activation, tr.z1[j]);
      g.b1[j] += dz;
      for (std::size_t i = 0; i < m.input_size; ++i) {
        g.w1(i, j) += dz * x[i];
      }
    }
  }
  return loss;
}

// ---------------------------------------------------------------------------
// LSTM: standard gate equations, h/c reset to zero for every window.
// ---------------------------------------------------------------------------

struct LstmModel {
  std::size_t input_size = 0;  // K channels
  std::size_t units = 0;       // U memory units
  Matrix w_i, w_f, w_o, w_g;   // input_size x units
  Matrix u_i, u_f, u_o, u_g;   // units x units
  std::vector<double> b_i, b_f, b_o, b_g;  // units
  std::vector<double> w_out;               // units
  double b_out = 0.0;

  std::size_t parameter_count() const {
    return 4 * (w_i.size() + u_i.size() + b_i.size()) + w_out.size() + 1;
  }

  void to_flat(std::vector<double>& out) const {
    out.clear();
    out.reserve(parameter_count());
    for (const Matrix* w : {&w_i, &w_f, &w_o, &w_g}) {
      out.insert(out.end(), w->data.begin(), w->data.end());
    }
    for (const Matrix* u : {&u_i, &u_f, &u_o, &u_g}) {
      out.insert(out.end(), u->data.begin(), u->data.end());
    }
    for (const std::vector<double>* b : {&b_i, &b_f, &b_o, &b_g}) {
      out.insert(out.end(), b->begin(), b->end());
    }
    out.insert(out.end(), w_out.begin(), w_out.end());
    out.push_back(b_out);
  }

  void from_flat(const std::vector<double>& flat) {
    const double* p = flat.data();
    for (Matrix* w : {&w_i, &w_f, &w_o, &w_g}) {
      std::copy(p, p + w->size(), w->data.begin());
      p += w->size();
    }
    for (Matrix* u : {&u_i, &u_f, &u_o, &u_g}) {
      std::copy(p, p + u->size(), u->data.begin());
      p += u->size();
    }
    for (std::vector<double>* b : {&b_i, &b_f, &b_o, &b_g}) {
      std::copy(p, p + b->size(), b->begin());
      p += b->size();
    }
    std::copy(p, p + w_out.size(), w_out.begin());
    p += w_out.size();
    b_out = *p;
  }
};

// Glorot-uniform weights, forget bias 1.0, everything else zero.
inline LstmModel make_lstm(std::size_t input_size, std::size_t units, SeededRng& rng) {
  LstmModel m;
  m.input_size = input_size;
  m.units = units;
  for (Matrix* w : {&m.w_i, &m.w_f, &m.w_o, &m.w_g}) {
    *w = Matrix(input_size, units);
    detail::glorot_fill(w->data, input_size, units, rng);
  }
  for (Matrix* u : {&m.u_i, &m.u_f, &m.u_o, &m.u_g}) {
    *u = Matrix(units, units);
    detail::glorot_fill(u->data, units, units, rng);
  }
  m.b_i.assign(units, 0.0);
  m.b_f.assign(units, 1.0);
  m.b_o.assign(units, 0.0);
  m.b_g.assign(units, 0.0);
  m.w_out.assign(units, 0.0);
  detail::glorot_fill(m.w_out, units, 1, rng);
  return m;
}

// Everything one step produces, kept for BPTT and for attribution.
struct LstmStepTrace {
  std::vector<double> zi, zf, zo, zg;  // gate pre-activations
  std::vector<double> i, f, o, g;
  std::vector<double> c, tanh_c, h;
  std::vector<double> c_prev;
};

namespace detail {

inline void gate_preactivations(const LstmModel& m, const double* x_t,
                                const std::vector<double>& h_prev, LstmStepTrace& t) {
  const std::size_t u = m.units;
  t.zi.assign(m.b_i.begin(), m.b_i.end());
  t.zf.assign(m.b_f.begin(), m.b_f.end());
  t.zo.assign(m.b_o.begin(), m.b_o.end());
  t.zg.assign(m.b_g.begin(), m.b_g.end());
  for (std::size_t k = 0; k < m.input_size; ++k) {
    const double xk = x_t[k];
    const double* wi = m.w_i.data.data() + k * u;
    const double* wf = m.w_f.data.data() + k * u;
    const double* wo = m.w_o.data.data() + k * u;
    const double* wg = m.w_g.data.data() + k * u;
    for (std::size_t j = 0; j < u; ++j) {
      t.zi[j] += wi[j] * xk;
      t.zf[j] += wf[j] * xk;
      t.zo[j] += wo[j] * xk;
      t.zg[j] += wg[j] * xk;
    }
  }
  for (std::size_t k = 0; k < u; ++k) {
    const double hk = h_prev[k];
    if (hk == 0.0) continue;
    const double* ui = m.u_i.data.data() + k * u;
    const double* uf = m.u_f.data.data() + k * u;
    const double* uo = m.u_o.data.data() + k * u;
    const double* ug = m.u_g.data.data() + k * u;
    for (std::size_t j = 0; j < u; ++j) {
      t.zi[j] += ui[j] * hk;
      t.zf[j] += uf[j] * hk;
      t.zo[j] += uo[j] * hk;
      t.zg[j] += ug[j] * hk;
    }
  }
}

}  // namespace detail

// One gate update: c' = f*c + i*g, h' = o*tanh(c').
inline void lstm_step(const LstmModel& m, const double* x_t, const std::vector<double>& h,
                      const std::vector<double>& c, LstmStepTrace& t) {
  if (h.size() != m.units || c.size() != m.units) {
    throw std::invalid_argument("lstm_step: state size mismatch");
  }
  const std::size_t u = m.units;
  detail::gate_preactivations(m, x_t, h, t);
  t.i.resize(u);
  t.f.resize(u);
  t.o.resize(u);
  t.g.resize(u);
  t.c.resize(u);
  t.tanh_c.resize(u);
  t.h.resize(u);
  t.c_prev = c;
  for (std::size_t j = 0; j < u; ++j) {
    t.i[j] = logistic(t.zi[j]);
    t.f[j] = logistic(t.zf[j]);
    t.o[j] = logistic(t.zo[j]);
    t.g[j] = std::tanh(t.zg[j]);
    t.c[j] = t.f[j] * c[j] + t.i[j] * t.g[j];
    t.tanh_c[j] = std::tanh(t.c[j]);
    t.h[j] = t.o[j] * t.tanh_c[j];
  }
}

// Iterates the window rows oldest to newest from h = c = 0; the head reads
// the final hidden state. `window` is row-major N x K.
inline double lstm_forward(const LstmModel& m, const double* window, std::size_t window_len,
                           std::vector<LstmStepTrace>* traces = nullptr) {
  if (window_len < 1) throw std::invalid_argument("lstm_forward: empty window");
  std::vector<double> h(m.units, 0.0), c(m.units, 0.0);
  LstmStepTrace t;
  if (traces) traces->resize(window_len);
  for (std::size_t n = 0; n < window_len; ++n) {
    LstmStepTrace& tr = traces ? (*traces)[n] : t;
    lstm_step(m, window + n * m.input_size, h, c, tr);
    h = tr.h;
    c = tr.c;
  }
  double y = m.b_out;
  for (std::size_t j = 0; j < m.units; ++j) y += m.w_out[j] * h[j];
  return y;
}

struct LstmGradients {
  Matrix w_i, w_f, w_o, w_g;
  Matrix u_i, u_f, u_o, u_g;
  std::vector<double> b_i, b_f, b_o, b_g;
  std::vector<double> w_out;
  double b_out = 0.0;

  void to_flat(std::vector<double>& out) const {
    out.clear();
    for (const Matrix* w : {&w_i, &w_f, &w_o, &w_g}) {
      out.insert(out.end(), w->data.begin(), w->data.end());
    }
    for (const Matrix* u : {&u_i, &u_f, &u_o, &u_g}) {
      out.insert(out.end(), u->data.begin(), u->data.end());
    }
    for (const std::vector<double>* b : {&b_i, &b_f, &b_o, &b_g}) {
      out.insert(out.end(), b->begin(), b->end());
    }
    out.insert(out.end(), w_out.begin(), w_out.end());
    out.push_back(b_out);
  }
};

// BPTT over a batch of windows (each row-major N x K); returns the batch
// MSE. Fixed reduction order, same as the MLP path.
inline double lstm_backward(const LstmModel& m, std::span<const double* const> windows,
                            std::span<const double> ys, std::size_t window_len,
                            LstmGradients& g) {
  if (windows.empty() || windows.size() != ys.size()) {
    throw std::invalid_argument("lstm_backward: empty or mismatched batch");
  }
  const std::size_t u = m.units;
  for (Matrix* w : {&g.w_i, &g.w_f, &g.w_o, &g.w_g}) *w = Matrix(m.input_size, u);
  for (Matrix* uu : {&g.u_i, &g.u_f, &g.u_o, &g.u_g}) *uu = Matrix(u, u);
  g.b_i.assign(u, 0.0);
  g.b_f.assign(u, 0.0);
  g.b_o.assign(u, 0.0);
  g.b_g.assign(u, 0.0);
  g.w_out.assign(u, 0.0);
  g.b_out = 0.0;

  const double inv_n = 1.0 / static_cast<double>(windows.size());
  double loss = 0.0;
  std::vector<LstmStepTrace> traces;
  std::vector<double> dh(u), dc(u), dh_prev(u), dc_prev(u);
  std::vector<double> dzi(u), dzf(u), dzo(u), dzg(u);
  for (std::size_t s = 0; s < windows.size(); ++s) {
    const double y = lstm_forward(m, windows[s], window_len, &traces);
    const double err = y - ys[s];
    loss += err * err * inv_n;
    const double dy = 2.0 * err * inv_n;
    g.b_out += dy;
    const LstmStepTrace& last = traces.back();
    for (std::size_t j = 0; j < u; ++j) {
      g.w_out[j] += dy * last.h[j];
      dh[j] = dy * m.w_out[j];
      dc[j] = 0.0;
    }
    for (std::size_t n = window_len; n-- > 0;) {
      const LstmStepTrace& t = traces[n];
      const double* x_t = windows[s] + n * m.input_size;
      std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
      std::fill(dc_prev.begin(), dc_prev.end(), 0.0);
      for (std::size_t j = 0; j < u; ++j) {
        const double do_ = dh[j] * t.tanh_c[j];
        const double dct = dc[j] + dh[j] * t.o[j] * (1.0 - t.tanh_c[j] * t.tanh_c[j]);
        const double di = dct * t.g[j];
        const double df = dct * t.c_prev[j];
        const double dg = dct * t.i[j];
        dc_prev[j] = dct * t.f[j];
        dzi[j] = di * t.i[j] * (1.0 - t.i[j]);
        dzf[j] = df * t.f[j] * (1.0 - t.f[j]);
        dzo[j] = do_ * t.o[j] * (1.0 - t.o[j]);
        dzg[j] = dg * (1.0 - t.g[j] * t.g[j]);
        g.b_i[j] += dzi[j];
        g.b_f[j] += dzf[j];
        g.b_o[j] += dzo[j];
        g.b_g[j] += dzg[j];
      }
      for (std::size_t k = 0; k < m.input_size; ++k) {
        const double xk = x_t[k];
        double* gwi = g.w_i.data.data() + k * u;
        double* gwf = g.w_f.data.data() + k * u;
        double* gwo = g.w_o.data.data() + k * u;
        double* gwg = g.w_g.data.data() + k * u;
        for (std::size_t j = 0; j < u; ++j) {
          gwi[j] += dzi[j] * xk;
          gwf[j] += dzf[j] * xk;
          gwo[j] += dzo[j] * xk;
          gwg[j] += dzg[j] * xk;
        }
      }
      if (n > 0) {
        const std::vector<double>& h_prev = traces[n - 1].h;
        for (std::size_t k = 0; k < u; ++k) {
          const double hk = h_prev[k];
          double* gui = g.u_i.data.data() + k * u;
          double* guf = g.u_f.data.data() + k * u;
          double* guo = g.u_o.data.data() + k * u;
          double* gug = g.u_g.data.data() + k * u;
          const double* ui = m.u_i.data.data() + k * u;
          const double* uf = m.u_f.data.data() + k * u;
          const double* uo = m.u_o.data.data() + k * u;
          const double* ug = m.u_g.data.data() + k * u;
          double acc = 0.0;
          for (std::size_t j = 0; j < u; ++j) {
            gui[j] += dzi[j] * hk;
            guf[j] += dzf[j] * hk;
            guo[j] += dzo[j] * hk;
            gug[j] += dzg[j] * hk;
            acc += ui[j] * dzi[j] + uf[j] * dzf[j] + uo[j] * dzo[j] + ug[j] * dzg[j];
          }
          dh_prev[k] += acc;
        }
      }
      dh = dh_prev;
      dc = dc_prev;
    }
  }
  return loss;
}

}  // namespace imfcast
