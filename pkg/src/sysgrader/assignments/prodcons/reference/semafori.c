#include <errno.h>
#include <sys/types.h>
#include <sys/ipc.h>
#include <sys/sem.h>
#include "semafori.h"

static void sem_change(int id_sem, int numsem, int delta) {
    struct sembuf sem_buf;
    sem_buf.sem_num = numsem;
    sem_buf.sem_op = delta;
    sem_buf.sem_flg = 0;
    while (semop(id_sem, &sem_buf, 1) < 0 && errno == EINTR) {
        /* retry */
    }
}

void Wait_Sem(int id_sem, int numsem) {
    sem_change(id_sem, numsem, -1);
}

void Signal_Sem(int id_sem, int numsem) {
    sem_change(id_sem, numsem, 1);
}
