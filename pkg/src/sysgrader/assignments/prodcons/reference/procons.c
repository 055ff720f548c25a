#include <stdio.h>
#include <unistd.h>
#include "procons.h"

int pick_request(queue_requests *q) {
    int value;
    Wait_Sem(sem_id, MESSAGE_AVAILABLE);
    Wait_Sem(sem_id, MUTEXC);

    value = q->buffer[q->head];
    printf("[CONS] pid=%d value=%d pos=%d\n", getpid(), value, q->head);
    fflush(stdout);
    q->head = (q->head + 1) % SIZE;

    Signal_Sem(sem_id, MUTEXC);
    /* wake up a producer waiting for a free buffer */
    Signal_Sem(sem_id, SPACE_AVAILABLE);
    return value;
}

void insert_request(queue_requests *q, int value) {
    Wait_Sem(sem_id, SPACE_AVAILABLE);
    /* mutual exclusion among producers */
    Wait_Sem(sem_id, MUTEXP);

    q->buffer[q->tail] = value;
    printf("[PROD] pid=%d value=%d pos=%d\n", getpid(), value, q->tail);
    fflush(stdout);
    q->tail = (q->tail + 1) % SIZE;

    /* leave the critical section first,
       then tell the consumer a request is ready */

    Signal_Sem(sem_id, MUTEXP);

    Signal_Sem(sem_id, MESSAGE_AVAILABLE);
}

int sem_id;
int shm_id;

queue_requests* initialization() {
    queue_requests *q;

    shm_id = shmget(IPC_PRIVATE, sizeof(queue_requests), IPC_CREAT|0664);
    if (shm_id < 0) {
        perror("shmget");
        exit(1);
    }
    q = (queue_requests *) shmat(shm_id, NULL, 0);
    q->head = 0;
    q->tail = 0;

    sem_id = semget(IPC_PRIVATE, 4, IPC_CREAT|0664);
    if (sem_id < 0) {
        perror("semget");
        exit(1);
    }

    semctl(sem_id, SPACE_AVAILABLE, SETVAL, 10);
    semctl(sem_id, MESSAGE_AVAILABLE, SETVAL, 0);
    semctl(sem_id, MUTEXP, SETVAL, 1);
    semctl(sem_id, MUTEXC, SETVAL, 1);

    return q;
}

void removal(queue_requests *q) {
    shmdt(q);
    shmctl(shm_id, IPC_RMID, NULL);
    semctl(sem_id, 0, IPC_RMID);
}
