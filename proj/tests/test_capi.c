/* SPDX-License-Identifier: Apache-2.0 */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "amhedge/amhedge.h"

static int failures = 0;

#define EXPECT(cond)                                                  \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

static void count_lines(const char* msg, void* user) {
  (void)msg;
  ++*(int*)user;
}

static void test_basics(void) {
  double v = 0.0;
  EXPECT(strcmp(amh_version(), "1.0.0") == 0);
  EXPECT(amh_bs_put_price(100.0, 100.0, 0.05, 0.2, 1.0, &v) == AMH_OK);
  EXPECT(fabs(v - 5.573526) < 1e-5);
  EXPECT(amh_bs_put_delta(100.0, 100.0, 0.05, 0.2, 1.0, &v) == AMH_OK);
  EXPECT(v < -0.36 && v > -0.37);
  EXPECT(amh_bs_put_price(-1.0, 100.0, 0.05, 0.2, 1.0, &v) == AMH_ERR_PARAMETER);
  EXPECT(strlen(amh_last_error()) > 0);
  EXPECT(amh_bs_put_price(100.0, 100.0, 0.05, 0.2, 1.0, NULL) == AMH_ERR_PARAMETER);
  EXPECT(amh_bs_put_price(100.0, 100.0, 0.05, 0.2, 1.0, &v) == AMH_OK);
  EXPECT(strlen(amh_last_error()) == 0);
  EXPECT(strstr(amh_command_names(), "evaluate-empirical") != NULL);
}

static void test_binomial(void) {
  amh_binomial* tree = NULL;
  double price = 0.0, hedge = 0.0, b = 0.0;
  EXPECT(amh_binomial_create(100.0, 100.0, 0.05, 0.2, 1.0, 1000, &tree) == AMH_OK);
  EXPECT(amh_binomial_price(tree, 100.0, 0.0, &price) == AMH_OK);
  EXPECT(price > 5.573526 && price < 6.2);
  EXPECT(amh_binomial_hedge(tree, 100.0, 0.5, &hedge) == AMH_OK);
  EXPECT(hedge >= -1.0 && hedge <= 0.0);
  EXPECT(amh_binomial_boundary(tree, 1.0, &b) == AMH_OK);
  EXPECT(b == 100.0);
  EXPECT(amh_binomial_price(tree, 100.0, 2.0, &price) == AMH_ERR_DOMAIN);
  EXPECT(amh_binomial_hedge(tree, 100.0, 1.0, &hedge) == AMH_ERR_DOMAIN);
  amh_binomial_free(tree);
  amh_binomial_free(NULL);
  EXPECT(amh_binomial_create(100.0, 100.0, 0.05, 0.2, 1.0, 0, &tree) == AMH_ERR_PARAMETER);
}

static void test_chebyshev(const char* dir) {
  amh_sv_params p = {100.0, 0.05, 0.2, 0.1, -0.4};
  amh_cheb_settings s = amh_cheb_default_settings();
  amh_chebyshev* surf = NULL;
  amh_chebyshev* back = NULL;
  double v = 0.0, w = 0.0, b = 0.0;
  char path[4096];
  EXPECT(s.n_s == 50 && s.n_v == 20);
  s.n_s = 16;
  s.n_v = 4;
  s.mc_per_node = 200;
  EXPECT(amh_chebyshev_create(&p, 100.0, 0.05, 1.0 / 12.0, 21, &s, 7, &surf) == AMH_OK);
  EXPECT(amh_chebyshev_price(surf, 100.0, 0.2, 0.0, &v) == AMH_OK);
  EXPECT(v > 1.5 && v < 3.5);
  EXPECT(amh_chebyshev_boundary(surf, 1.0 / 12.0, 0.2, &b) == AMH_OK);
  EXPECT(fabs(b - 100.0) < 1e-9);
  EXPECT(amh_chebyshev_price(surf, 100.0, 0.2, 1.0, &v) == AMH_ERR_DOMAIN);
  snprintf(path, sizeof path, "%s/surface.bin", dir);
  EXPECT(amh_chebyshev_save(surf, path) == AMH_OK);
  EXPECT(amh_chebyshev_load(path, &back) == AMH_OK);
  EXPECT(amh_chebyshev_price(surf, 97.0, 0.22, 0.01, &v) == AMH_OK);
  EXPECT(amh_chebyshev_price(back, 97.0, 0.22, 0.01, &w) == AMH_OK);
  EXPECT(v == w);
  amh_chebyshev_free(surf);
  amh_chebyshev_free(back);
  EXPECT(amh_chebyshev_load("/nonexistent/surface.bin", &back) == AMH_ERR_IO);
}

static void test_config_and_run(const char* dir) {
  amh_config* cfg = NULL;
  char* text = NULL;
  char* result = NULL;
  char out[4096];
  int lines = 0;
  amh_agent* agent = NULL;

  EXPECT(amh_config_parse("{\"mode\": \"gbm\"}", &cfg) == AMH_ERR_CONFIG);
  EXPECT(strstr(amh_last_error(), "seed") != NULL);
  EXPECT(amh_config_parse(
             "{\"mode\": \"gbm\", \"seed\": 2, \"pricer\": {\"tree_steps\": 200, \"chebyshev\": "
             "{\"n_s\": 12, \"n_v\": 4, \"mc_per_node\": 100, \"pilot_paths\": 200}}, "
             "\"training\": {\"episodes\": 3, \"steps_per_episode\": 10, \"warmup\": 10, \"hidden\": 8}, "
             "\"test\": {\"paths\": 50, \"rebalances\": 10}}",
             &cfg) == AMH_OK);
  snprintf(out, sizeof out, "%s/run", dir);
  EXPECT(amh_config_set_output(cfg, out) == AMH_OK);
  EXPECT(amh_config_set_lambda(cfg, 0.01) == AMH_OK);
  EXPECT(amh_config_set_maturity(cfg, "not-a-date") == AMH_ERR_CONFIG);
  EXPECT(amh_config_to_json(cfg, &text) == AMH_OK);
  EXPECT(strstr(text, "\"lambdas\"") != NULL);
  amh_string_free(text);

  EXPECT(amh_run("price", cfg, NULL, NULL, &result) == AMH_OK);
  EXPECT(result != NULL && strstr(result, "binomial_american") != NULL);
  amh_string_free(result);

  snprintf(out, sizeof out, "%s/train", dir);
  EXPECT(amh_config_set_output(cfg, out) == AMH_OK);
  EXPECT(amh_run("train", cfg, count_lines, &lines, NULL) == AMH_OK);
  EXPECT(lines > 0);
  snprintf(out, sizeof out, "%s/train/agent.json", dir);
  EXPECT(amh_agent_load(out, &agent) == AMH_OK);
  {
    double a = 1.0;
    EXPECT(amh_agent_position(agent, 1.0, 0.5, 0.0, &a) == AMH_OK);
    EXPECT(a >= -1.0 && a <= 0.0);
    EXPECT(amh_agent_position(agent, NAN, 0.5, 0.0, &a) == AMH_ERR_PARAMETER);
  }
  amh_agent_free(agent);

  EXPECT(amh_config_set_checkpoint(cfg, out) == AMH_OK);
  snprintf(out, sizeof out, "%s/eval", dir);
  EXPECT(amh_config_set_output(cfg, out) == AMH_OK);
  EXPECT(amh_run("evaluate", cfg, NULL, NULL, NULL) == AMH_OK);
  snprintf(out, sizeof out, "%s/eval/report_drl_lambda0.01.csv", dir);
  {
    FILE* f = fopen(out, "r");
    EXPECT(f != NULL);
    if (f) fclose(f);
  }
  EXPECT(amh_run("dance", cfg, NULL, NULL, NULL) == AMH_ERR_CONFIG);
  EXPECT(amh_run(NULL, cfg, NULL, NULL, NULL) == AMH_ERR_PARAMETER);
  amh_config_free(cfg);
  EXPECT(amh_config_load("/nonexistent/config.json", &cfg) == AMH_ERR_IO);
}

int main(int argc, char** argv) {
  const char* dir = argc > 1 ? argv[1] : ".";
  char cmd[4200];
  snprintf(cmd, sizeof cmd, "mkdir -p '%s'", dir);
  if (system(cmd) != 0) return 2;
  test_basics();
  test_binomial();
  test_chebyshev(dir);
  test_config_and_run(dir);
  if (failures) {
    fprintf(stderr, "%d check(s) failed\n", failures);
    return 1;
  }
  printf("all C API checks passed\n");
  return 0;
}
