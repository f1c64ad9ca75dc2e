// Copyright 2020 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface of libgtboed. All functions return a gtb_status; on failure
 * the calling thread's last error holds a description. Strings handed out
 * through char** parameters are owned by the caller and released with
 * gtb_string_free. JSON documents use the same keys as the configuration
 * files described in README.md. */

#ifndef GTBOED_GTBOED_H_
#define GTBOED_GTBOED_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define GTB_API __declspec(dllexport)
#else
#define GTB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gtb_status {
  GTB_OK = 0,
  GTB_ERR_INVALID_ARGUMENT = 1,
  GTB_ERR_CONFIGURATION = 2,
  GTB_ERR_DEGENERATE_EVIDENCE = 3,
  GTB_ERR_NOT_FOUND = 4,
  GTB_ERR_CONFLICT = 5,
  GTB_ERR_IO = 6,
  GTB_ERR_INTERNAL = 7
} gtb_status;

typedef struct gtb_store gtb_store;
typedef struct gtb_posterior gtb_posterior;

GTB_API const char* gtb_version(void);
GTB_API const char* gtb_status_name(gtb_status status);

/* Message of the last failure on this thread, or "" after a success. */
GTB_API const char* gtb_last_error(void);
/* Same failure as {"code", "message", "fields": [{"field", "message"}]}. */
GTB_API const char* gtb_last_error_json(void);

GTB_API void gtb_string_free(char* s);

/* Campaign store rooted at a data directory (created if missing). */
GTB_API gtb_status gtb_store_open(const char* data_dir, gtb_store** out);
GTB_API void gtb_store_close(gtb_store* store);

GTB_API gtb_status gtb_campaign_create(gtb_store* store, const char* request,
                                       char** out_json);
GTB_API gtb_status gtb_campaign_get(gtb_store* store, const char* id,
                                    char** out_json);
GTB_API gtb_status gtb_campaign_propose(gtb_store* store, const char* id,
                                        char** out_json);
/* request: {"outcomes": [0, 1, ...], "seq": optional} or a bare array. */
GTB_API gtb_status gtb_campaign_submit(gtb_store* store, const char* id,
                                       const char* request, char** out_json);
GTB_API gtb_status gtb_campaign_marginal(gtb_store* store, const char* id,
                                         char** out_json);
GTB_API gtb_status gtb_campaign_events(gtb_store* store, const char* id,
                                       char** out_json);
GTB_API gtb_status gtb_campaign_list(gtb_store* store, char** out_json);

/* Runs `runs` simulations on `parallelism` threads (0: one per hardware
 * thread) and writes metrics.csv, trajectories.jsonl and
 * config.json into out_dir. summary_json may be NULL. */
GTB_API gtb_status gtb_simulate(const char* config_json, size_t runs,
                                uint64_t seed, size_t parallelism,
                                const char* out_dir, char** summary_json);

/* Hybrid decode of a recorded test file (one test per line: indices, then
 * whitespace and a 0/1 outcome). options_json may be NULL. */
GTB_API gtb_status gtb_decode(const char* tests_text, const char* options_json,
                              char** out_json);

/* Particle posterior over a configured model (n, q or rates, specificity,
 * sensitivity, max_group_size, smc, seed). */
GTB_API gtb_status gtb_posterior_create(const char* config_json,
                                        gtb_posterior** out);
GTB_API void gtb_posterior_free(gtb_posterior* posterior);
GTB_API size_t gtb_posterior_population(const gtb_posterior* posterior);
GTB_API size_t gtb_posterior_particles(const gtb_posterior* posterior);
GTB_API gtb_status gtb_posterior_update(gtb_posterior* posterior,
                                        const char* groups_json,
                                        const char* outcomes_json);
/* out must hold gtb_posterior_population() doubles. */
GTB_API gtb_status gtb_posterior_marginal(const gtb_posterior* posterior,
                                          double* out, size_t length);
GTB_API gtb_status gtb_posterior_mutual_information(
    const gtb_posterior* posterior, const char* groups_json, double* out);
GTB_API gtb_status gtb_posterior_propose(const gtb_posterior* posterior,
                                         size_t groups, char** out_json);
GTB_API gtb_status gtb_posterior_snapshot(const gtb_posterior* posterior,
                                          char** out_json);
GTB_API gtb_status gtb_posterior_restore(gtb_posterior* posterior,
                                         const char* snapshot_json);

#ifdef __cplusplus
}
#endif

#endif /* GTBOED_GTBOED_H_ */
