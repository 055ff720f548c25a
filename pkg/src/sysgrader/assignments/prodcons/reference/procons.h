#ifndef PROCONS_H
#define PROCONS_H

#include <stdlib.h>
#include <sys/types.h>
#include <sys/ipc.h>
#include <sys/sem.h>
#include <sys/shm.h>
#include "semafori.h"

#define SIZE 10

#define SPACE_AVAILABLE 0
#define MESSAGE_AVAILABLE 1
#define MUTEXP 2
#define MUTEXC 3

typedef struct {
    int buffer[SIZE];
    int head;
    int tail;
} queue_requests;

extern int sem_id;
extern int shm_id;

queue_requests* initialization();
void removal(queue_requests *q);
void insert_request(queue_requests *q, int value);
int pick_request(queue_requests *q);

#endif
