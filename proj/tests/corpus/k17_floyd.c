#pragma kernel floyd params(N=4)
long P[N][N];

for (int k = 0; k < N; k++)
  for (int i = 0; i < N; i++)
    for (int j = 0; j < N; j++)
      // comp_ID: comp00
      P[i][j] = P[i][j] + P[i][k] * P[k][j];
