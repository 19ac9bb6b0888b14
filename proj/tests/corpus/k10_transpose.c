#pragma kernel transpose params(N=4, M=3)
long A[N][M];
long B[M][N];

for (int i = 0; i < N; i++)
  for (int j = 0; j < M; j++)
    // comp_ID: comp00
    B[j][i] = A[i][j] * 2;
