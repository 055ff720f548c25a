#include <stdio.h>
#include <stdlib.h>
#include <unistd.h>
#include <sys/wait.h>
#include "procons.h"

#define NUM_PRODUCERS 3
#define PRODUCTIONS 5

static void producer(queue_requests *q) {
    int k;
    srand(getpid());
    for (k = 0; k < PRODUCTIONS; k++) {
        insert_request(q, rand() % 10);
    }
}

static void consumer(queue_requests *q) {
    int k;
    for (k = 0; k < NUM_PRODUCERS * PRODUCTIONS; k++) {
        pick_request(q);
    }
}

int main() {
    int i;
    pid_t pid;
    queue_requests *q = initialization();

    for (i = 0; i < NUM_PRODUCERS; i++) {
        fflush(stdout);
        pid = fork();
        if (pid == 0) {
            producer(q);
            exit(0);
        }
    }

    fflush(stdout);
    pid = fork();
    if (pid == 0) {
        consumer(q);
        exit(0);
    }

    for (i = 0; i < NUM_PRODUCERS + 1; i++) {
        wait(NULL);
    }

    removal(q);
    return 0;
}
