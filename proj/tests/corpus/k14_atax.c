#pragma kernel atax params(M=3, N=4)
long A[M][N];
long x[N];
long y[N];
long tmp[M];

for (int i = 0; i < M; i++)
  for (int j = 0; j < N; j++)
    // comp_ID: comp00
    tmp[i] += A[i][j] * x[j];
for (int i = 0; i < M; i++)
  for (int j = 0; j < N; j++)
    // comp_ID: comp01
    y[j] += A[i][j] * tmp[i];
