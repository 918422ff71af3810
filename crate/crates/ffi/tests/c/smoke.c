#include <stdio.h>
#include <string.h>
#include "theonlab.h"

#define CHECK(cond)                                                  \
  do {                                                               \
    if (!(cond)) {                                                   \
      const char *e = tl_last_error();                               \
      fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond,        \
              e ? e : "no error");                                   \
      return 1;                                                      \
    }                                                                \
  } while (0)

int main(void) {
  TlTheon *t = NULL;
  TlModel *m = NULL;
  char *text = NULL;
  TlDensity d;

  CHECK(tl_theon_new("qr-tournamon:k=2", &t) == TL_STATUS_OK);
  CHECK(tl_theon_max_arity(t) == 2);
  CHECK(tl_model_parse(t, "n=3\nE: (1,2);(2,3);(3,1)\n", &m) == TL_STATUS_OK);
  CHECK(tl_model_n(m) == 3);
  CHECK(tl_density(t, m, 200000, 7, &d) == TL_STATUS_OK);
  /* Uniform tournaments: 1/8 per labeled tournament, two labeled cycles. */
  CHECK(d.labeled > 0.125 - 4 * d.labeled_stderr);
  CHECK(d.labeled < 0.125 + 4 * d.labeled_stderr);
  CHECK(d.unlabeled > 0.25 - 4 * d.unlabeled_stderr);
  CHECK(d.unlabeled < 0.25 + 4 * d.unlabeled_stderr);
  CHECK(tl_model_to_text(m, &text) == TL_STATUS_OK);
  CHECK(strstr(text, "n=3") != NULL);
  tl_string_free(text);
  tl_model_free(m);

  CHECK(tl_theon_new("no-such-theon", &t) == TL_STATUS_UNKNOWN_NAME);
  CHECK(t == NULL);
  CHECK(tl_last_error() != NULL);
  tl_theon_free(t);
  printf("ok %s\n", tl_version());
  return 0;
}
