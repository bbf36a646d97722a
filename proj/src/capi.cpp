// SPDX-License-Identifier: Apache-2.0
#include "amhedge/amhedge.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <sstream>
#include <streambuf>
#include <string>

#include "amhedge/binomial.hpp"
#include "amhedge/black_scholes.hpp"
#include "amhedge/chebyshev.hpp"
#include "amhedge/ddpg.hpp"
#include "amhedge/error.hpp"
#include "amhedge/experiments.hpp"

struct amh_config {
  amh::ExperimentConfig cfg;
};
struct amh_binomial {
  amh::BinomialModel tree;
};
struct amh_chebyshev {
  amh::ChebSurface surface;
};
struct amh_agent {
  amh::Mlp actor;
};

namespace {

thread_local std::string g_last_error;

template <class F>
amh_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return AMH_OK;
  } catch (const amh::Error& e) {
    g_last_error = e.what();
    return static_cast<amh_status>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return AMH_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
  if (!p) throw amh::ParameterError(std::string(what) + " must not be null");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

/// Forwards complete lines to a C callback.
class CallbackBuf : public std::streambuf {
 public:
  CallbackBuf(amh_log_fn fn, void* user) : fn_(fn), user_(user) {}
  ~CallbackBuf() override { flush_line(); }

 protected:
  int_type overflow(int_type ch) override {
    if (ch == traits_type::eof()) return traits_type::not_eof(ch);
    if (ch == '\n') {
      flush_line();
    } else {
      line_ += static_cast<char>(ch);
    }
    return ch;
  }

 private:
  void flush_line() {
    if (fn_ && !line_.empty()) fn_(line_.c_str(), user_);
    line_.clear();
  }
  amh_log_fn fn_;
  void* user_;
  std::string line_;
};

}  // namespace

extern "C" {

const char* amh_version(void) { return "1.0.0"; }

const char* amh_last_error(void) { return g_last_error.c_str(); }

void amh_string_free(char* s) { std::free(s); }

amh_status amh_config_load(const char* path, amh_config** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new amh_config{amh::ExperimentConfig::load(path)};
  });
}

amh_status amh_config_parse(const char* json_text, amh_config** out) {
  return guard([&] {
    need(json_text, "json_text");
    need(out, "out");
    *out = new amh_config{amh::ExperimentConfig::from_json_text(json_text)};
  });
}

void amh_config_free(amh_config* cfg) { delete cfg; }

namespace {

amh_status override(amh_config* cfg, const amh::Overrides& o) {
  return guard([&] {
    need(cfg, "cfg");
    amh::apply_overrides(cfg->cfg, o);
  });
}

}  // namespace

amh_status amh_config_set_seed(amh_config* cfg, uint64_t seed) {
  amh::Overrides o;
  o.seed = seed;
  return override(cfg, o);
}

amh_status amh_config_set_lambda(amh_config* cfg, double lambda) {
  amh::Overrides o;
  o.lambda = lambda;
  return override(cfg, o);
}

amh_status amh_config_set_output(amh_config* cfg, const char* dir) {
  if (!dir) return guard([] { need(nullptr, "dir"); });
  amh::Overrides o;
  o.out = dir;
  return override(cfg, o);
}

amh_status amh_config_set_symbol(amh_config* cfg, const char* symbol) {
  if (!symbol) return guard([] { need(nullptr, "symbol"); });
  amh::Overrides o;
  o.symbol = symbol;
  return override(cfg, o);
}

amh_status amh_config_set_maturity(amh_config* cfg, const char* date) {
  if (!date) return guard([] { need(nullptr, "date"); });
  amh::Overrides o;
  o.maturity = date;
  return override(cfg, o);
}

amh_status amh_config_set_strike(amh_config* cfg, double strike) {
  amh::Overrides o;
  o.strike = strike;
  return override(cfg, o);
}

amh_status amh_config_set_paths(amh_config* cfg, size_t paths) {
  amh::Overrides o;
  o.paths = paths;
  return override(cfg, o);
}

amh_status amh_config_set_steps(amh_config* cfg, int steps) {
  amh::Overrides o;
  o.steps = steps;
  return override(cfg, o);
}

amh_status amh_config_set_checkpoint(amh_config* cfg, const char* path) {
  if (!path) return guard([] { need(nullptr, "path"); });
  amh::Overrides o;
  o.checkpoint = path;
  return override(cfg, o);
}

amh_status amh_config_to_json(const amh_config* cfg, char** out) {
  return guard([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = dup(cfg->cfg.to_json().dump(2));
  });
}

const char* amh_command_names(void) {
  static const std::string names = [] {
    std::string s;
    for (const auto& n : amh::command_names()) s += n + "\n";
    return s;
  }();
  return names.c_str();
}

amh_status amh_run(const char* command, const amh_config* cfg, amh_log_fn log, void* user, char** result) {
  return guard([&] {
    need(command, "command");
    need(cfg, "cfg");
    if (result) *result = nullptr;
    std::ostringstream printed;
    CallbackBuf buf(log, user);
    std::ostream log_stream(&buf);
    amh::run_command(command, cfg->cfg, printed, log_stream);
    if (result) *result = dup(printed.str());
  });
}

amh_status amh_bs_put_price(double s, double k, double r, double sigma, double tau, double* out) {
  return guard([&] {
    need(out, "out");
    *out = amh::bs::put_price({s, k, r, sigma, tau});
  });
}

amh_status amh_bs_put_delta(double s, double k, double r, double sigma, double tau, double* out) {
  return guard([&] {
    need(out, "out");
    *out = amh::bs::put_delta({s, k, r, sigma, tau});
  });
}

amh_status amh_binomial_create(double s0, double k, double r, double sigma, double maturity, int steps,
                               amh_binomial** out) {
  return guard([&] {
    need(out, "out");
    *out = new amh_binomial{amh::build_american_put(s0, k, r, sigma, maturity, steps)};
  });
}

void amh_binomial_free(amh_binomial* tree) { delete tree; }

amh_status amh_binomial_price(const amh_binomial* tree, double s, double t, double* out) {
  return guard([&] {
    need(tree, "tree");
    need(out, "out");
    *out = tree->tree.price_at(s, t);
  });
}

amh_status amh_binomial_hedge(const amh_binomial* tree, double s, double t, double* out) {
  return guard([&] {
    need(tree, "tree");
    need(out, "out");
    *out = tree->tree.hedge_at(s, t);
  });
}

amh_status amh_binomial_boundary(const amh_binomial* tree, double t, double* out) {
  return guard([&] {
    need(tree, "tree");
    need(out, "out");
    *out = tree->tree.boundary().at(t);
  });
}

amh_cheb_settings amh_cheb_default_settings(void) {
  const amh::ChebSettings d;
  return {d.n_s, d.n_v, d.mc_per_node, d.pilot_paths, d.buffer};
}

amh_status amh_chebyshev_create(const amh_sv_params* params, double k, double r, double maturity, int steps,
                                const amh_cheb_settings* settings, uint64_t seed, amh_chebyshev** out) {
  return guard([&] {
    need(params, "params");
    need(out, "out");
    const amh_cheb_settings s = settings ? *settings : amh_cheb_default_settings();
    const amh::SvParams p{params->s0, params->mu, params->sigma0, params->nu, params->rho};
    const amh::TimeGrid grid(maturity, steps);
    const auto dom =
        amh::make_domain(p, grid, s.pilot_paths, s.buffer, s.n_s, s.n_v, amh::stream_key(seed, 1));
    *out = new amh_chebyshev{amh::build_surface(p, k, r, dom, s.mc_per_node, amh::stream_key(seed, 2))};
  });
}

amh_status amh_chebyshev_load(const char* path, amh_chebyshev** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new amh_chebyshev{amh::ChebSurface::load(path)};
  });
}

amh_status amh_chebyshev_save(const amh_chebyshev* surface, const char* path) {
  return guard([&] {
    need(surface, "surface");
    need(path, "path");
    surface->surface.save(path);
  });
}

void amh_chebyshev_free(amh_chebyshev* surface) { delete surface; }

amh_status amh_chebyshev_price(const amh_chebyshev* surface, double s, double vol, double t, double* out) {
  return guard([&] {
    need(surface, "surface");
    need(out, "out");
    *out = surface->surface.price_query(s, vol, t);
  });
}

amh_status amh_chebyshev_boundary(const amh_chebyshev* surface, double t, double vol, double* out) {
  return guard([&] {
    need(surface, "surface");
    need(out, "out");
    *out = surface->surface.boundary_at(t, vol);
  });
}

amh_status amh_agent_load(const char* path, amh_agent** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new amh_agent{amh::DdpgAgent::load(path).actor};
  });
}

void amh_agent_free(amh_agent* agent) { delete agent; }

amh_status amh_agent_position(const amh_agent* agent, double moneyness, double tau, double prev, double* out) {
  return guard([&] {
    need(agent, "agent");
    need(out, "out");
    if (!std::isfinite(moneyness) || !std::isfinite(tau) || !std::isfinite(prev))
      throw amh::ParameterError("agent state must be finite");
    *out = amh::policy(agent->actor, {moneyness, tau, prev});
  });
}

}  // extern "C"
