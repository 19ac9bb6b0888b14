#pragma kernel syrk params(N=4, M=3)
long C[N][N];
long A[N][M];

for (int i = 0; i < N; i++)
  for (int j = 0; j <= i; j++)
    for (int k = 0; k < M; k++)
      // comp_ID: comp00
      C[i][j] += A[i][k] * A[j][k];
