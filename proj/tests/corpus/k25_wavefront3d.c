#pragma kernel wave3d params(N=4)
long A[N][N][N];

for (int i = 1; i < N; i++)
  for (int j = 1; j < N; j++)
    for (int k = 1; k < N; k++)
      // comp_ID: comp00
      A[i][j][k] = A[i - 1][j][k] + A[i][j - 1][k] + A[i][j][k - 1];
