/* SPDX-License-Identifier: Apache-2.0 */
#ifndef AMHEDGE_AMHEDGE_H
#define AMHEDGE_AMHEDGE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define AMH_API __declspec(dllexport)
#else
#define AMH_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum amh_status {
  AMH_OK = 0,
  AMH_ERR_PARAMETER = 1,
  AMH_ERR_DOMAIN = 2,
  AMH_ERR_FORMAT = 3,
  AMH_ERR_DATA = 4,
  AMH_ERR_LOOKUP = 5,
  AMH_ERR_CONFIG = 6,
  AMH_ERR_SOURCE = 7,
  AMH_ERR_IO = 8,
  AMH_ERR_INTERNAL = 99
} amh_status;

/* Library version, "major.minor.patch". */
AMH_API const char* amh_version(void);

/* Message of the last failed call on this thread; "" if none. */
AMH_API const char* amh_last_error(void);

/* Frees strings returned through char** out-parameters. */
AMH_API void amh_string_free(char* s);

/* ---- experiment configuration ---- */

typedef struct amh_config amh_config;

AMH_API amh_status amh_config_load(const char* path, amh_config** out);
AMH_API amh_status amh_config_parse(const char* json_text, amh_config** out);
AMH_API void amh_config_free(amh_config* cfg);

AMH_API amh_status amh_config_set_seed(amh_config* cfg, uint64_t seed);
AMH_API amh_status amh_config_set_lambda(amh_config* cfg, double lambda);
AMH_API amh_status amh_config_set_output(amh_config* cfg, const char* dir);
AMH_API amh_status amh_config_set_symbol(amh_config* cfg, const char* symbol);
/* ISO date, YYYY-MM-DD. */
AMH_API amh_status amh_config_set_maturity(amh_config* cfg, const char* date);
AMH_API amh_status amh_config_set_strike(amh_config* cfg, double strike);
AMH_API amh_status amh_config_set_paths(amh_config* cfg, size_t paths);
AMH_API amh_status amh_config_set_steps(amh_config* cfg, int steps);
AMH_API amh_status amh_config_set_checkpoint(amh_config* cfg, const char* path);

/* Fully resolved configuration as JSON text; free with amh_string_free. */
AMH_API amh_status amh_config_to_json(const amh_config* cfg, char** out);

/* Names of the commands accepted by amh_run, one per line. */
AMH_API const char* amh_command_names(void);

typedef void (*amh_log_fn)(const char* message, void* user);

/* Runs a command (train, calibrate, evaluate, evaluate-empirical, price,
 * boundary). Progress text goes to `log` if non-null. If `result` is non-null
 * it receives the command's printed output (possibly empty); free it with
 * amh_string_free. */
AMH_API amh_status amh_run(const char* command, const amh_config* cfg, amh_log_fn log, void* user,
                           char** result);

/* ---- Black-Scholes European put ---- */

AMH_API amh_status amh_bs_put_price(double s, double k, double r, double sigma, double tau, double* out);
AMH_API amh_status amh_bs_put_delta(double s, double k, double r, double sigma, double tau, double* out);

/* ---- binomial American put ---- */

typedef struct amh_binomial amh_binomial;

AMH_API amh_status amh_binomial_create(double s0, double k, double r, double sigma, double maturity, int steps,
                                       amh_binomial** out);
AMH_API void amh_binomial_free(amh_binomial* tree);
AMH_API amh_status amh_binomial_price(const amh_binomial* tree, double s, double t, double* out);
/* Hedge position in [-1, 0]; t must be before maturity. */
AMH_API amh_status amh_binomial_hedge(const amh_binomial* tree, double s, double t, double* out);
AMH_API amh_status amh_binomial_boundary(const amh_binomial* tree, double t, double* out);

/* ---- Chebyshev American put under stochastic volatility ---- */

typedef struct amh_sv_params {
  double s0;
  double mu;
  double sigma0;
  double nu;
  double rho;
} amh_sv_params;

typedef struct amh_cheb_settings {
  int n_s;
  int n_v;
  int mc_per_node;
  size_t pilot_paths;
  double buffer;
} amh_cheb_settings;

/* Defaults: 50 x 20 nodes, 1000 draws per node, 1000 pilot paths, 10% buffer. */
AMH_API amh_cheb_settings amh_cheb_default_settings(void);

typedef struct amh_chebyshev amh_chebyshev;

AMH_API amh_status amh_chebyshev_create(const amh_sv_params* params, double k, double r, double maturity,
                                        int steps, const amh_cheb_settings* settings, uint64_t seed,
                                        amh_chebyshev** out);
AMH_API amh_status amh_chebyshev_load(const char* path, amh_chebyshev** out);
AMH_API amh_status amh_chebyshev_save(const amh_chebyshev* surface, const char* path);
AMH_API void amh_chebyshev_free(amh_chebyshev* surface);
AMH_API amh_status amh_chebyshev_price(const amh_chebyshev* surface, double s, double vol, double t, double* out);
AMH_API amh_status amh_chebyshev_boundary(const amh_chebyshev* surface, double t, double vol, double* out);

/* ---- trained hedging agent ---- */

typedef struct amh_agent amh_agent;

AMH_API amh_status amh_agent_load(const char* path, amh_agent** out);
AMH_API void amh_agent_free(amh_agent* agent);
/* Deterministic position in [-1, 0] for state (S/K, time to maturity, previous position). */
AMH_API amh_status amh_agent_position(const amh_agent* agent, double moneyness, double tau, double prev,
                                      double* out);

#ifdef __cplusplus
}
#endif

#endif
