#ifndef SEMAFORI_H
#define SEMAFORI_H

void Wait_Sem(int id_sem, int numsem);
void Signal_Sem(int id_sem, int numsem);

#endif
