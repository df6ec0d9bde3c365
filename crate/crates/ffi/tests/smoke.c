#include <math.h>
#include <stdio.h>
#include "maxent.h"

#define CHECK(cond)                                                      \
    do {                                                                 \
        if (!(cond)) {                                                   \
            fprintf(stderr, "failed: %s (%s)\n", #cond, maxent_last_error()); \
            return 1;                                                    \
        }                                                                \
    } while (0)

int main(void) {
    MaxentProblem *p = NULL;
    CHECK(maxent_problem_new_continuous(0.0, 5.0, 64, &p) == MAXENT_STATUS_OK);
    CHECK(maxent_problem_add_power(p, 1, 1.0) == MAXENT_STATUS_OK);

    MaxentSolution *s = NULL;
    CHECK(maxent_solve(p, 0.0, 0, &s) == MAXENT_STATUS_OK);
    CHECK(maxent_solution_node_count(s) == 64);

    double lambda[1];
    CHECK(maxent_solution_multipliers(s, lambda, 1) == MAXENT_STATUS_OK);
    CHECK(fabs(lambda[0] - 0.9602015099445036) < 1e-8);

    double gamma[64];
    CHECK(maxent_solution_gamma(s, gamma, 64) == MAXENT_STATUS_OK);
    CHECK(gamma[10] == lambda[0]);
    CHECK(maxent_solution_gamma(s, gamma, 3) == MAXENT_STATUS_BUFFER_TOO_SMALL);

    double h = 0.0;
    double masses[2] = {0.5, 0.5};
    CHECK(maxent_discrete_entropy(masses, 2, true, &h) == MAXENT_STATUS_OK);
    CHECK(h == 1.0);

    maxent_solution_free(s);
    maxent_problem_free(p);
    printf("ok\n");
    return 0;
}
