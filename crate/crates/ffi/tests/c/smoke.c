#include <math.h>
#include <stdio.h>
#include "persuasion.h"

#define CHECK(expr)                                                        \
  do {                                                                     \
    if (!(expr)) {                                                         \
      fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #expr,       \
              persuasion_last_error());                                    \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(void) {
  PersuasionDist *d = NULL;
  double x = 0.0;
  CHECK(persuasion_dist_uniform(0.0, 1.0, &d) == PERSUASION_STATUS_OK);
  CHECK(persuasion_verifying_mass(d, 0.5, &x) == PERSUASION_STATUS_OK);
  CHECK(x == 0.25);
  CHECK(persuasion_silence_posterior(d, 0.1875, PERSUASION_BRANCH_SMALLEST, &x) ==
        PERSUASION_STATUS_OK);
  CHECK(fabs(x - 0.5) <= 1e-10);
  CHECK(persuasion_verifying_mass(d, 2.0, &x) == PERSUASION_STATUS_DOMAIN);
  CHECK(persuasion_last_error()[0] != '\0');

  PersuasionModel *m = NULL;
  PersuasionLaw law;
  CHECK(persuasion_model_new(0.5, 0.1, 0.01, &m) == PERSUASION_STATUS_OK);
  CHECK(persuasion_optimal_experiment(m, d, 101, &law) == PERSUASION_STATUS_OK);
  CHECK(law.lo <= 0.5 && 0.5 <= law.hi);

  persuasion_model_free(m);
  persuasion_dist_free(d);
  printf("ok\n");
  return 0;
}
